#include "fairaudit/error.hpp"

namespace fairaudit {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::io: return "IoError";
    case ErrorCode::parse: return "ParseError";
    case ErrorCode::missing_column: return "MissingColumn";
    case ErrorCode::duplicate_key: return "DuplicateKey";
    case ErrorCode::empty_join: return "EmptyJoin";
    case ErrorCode::zero_variance: return "ZeroVariance";
    case ErrorCode::empty_side: return "EmptySide";
    case ErrorCode::degenerate_range: return "DegenerateRange";
    case ErrorCode::too_few_samples: return "TooFewSamples";
    case ErrorCode::non_finite_feature: return "NonFiniteFeature";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::constant_target: return "ConstantTarget";
    case ErrorCode::degenerate_feature: return "DegenerateFeature";
    case ErrorCode::empty_group: return "EmptyGroup";
    case ErrorCode::singleton_group: return "SingletonGroup";
    case ErrorCode::mismatched_provenance: return "MismatchedProvenance";
    case ErrorCode::invalid_request: return "InvalidRequest";
    case ErrorCode::zero_baseline: return "ZeroBaseline";
    case ErrorCode::empty_cell: return "EmptyCell";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace fairaudit
