#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairaudit/fairness.hpp"

namespace fairaudit {

enum class Level { low, high };

std::string_view to_string(Level level);

/// How per-(A1, level) averages combine the A2 cells. With sample-count
/// weights a cell's weight is the size of its two subgroups together.
enum class AverageWeighting { uniform, sample_count };

struct IntersectOptions {
  AverageWeighting weighting = AverageWeighting::uniform;
  std::size_t min_subgroup = 3;
};

struct IntersectionCell {
  std::string a1;
  Level a1_level = Level::low;
  std::string a2;
  double mae_a2_low = 0.0;
  double mae_a2_high = 0.0;
  double delta = 0.0;
  /// Subgroup sizes ordered (A1 low, A2 low), (A1 low, A2 high),
  /// (A1 high, A2 low), (A1 high, A2 high).
  std::array<std::size_t, 4> n_subgroups{};
  bool skipped = false;
  std::string skip_reason;

  /// Size of the two subgroups this cell compares.
  std::size_t weight() const;
};

struct IntersectionReport {
  std::vector<std::string> race;
  std::vector<std::string> religion;
  std::vector<IntersectionCell> cells;  // race-major, High before Low, then religion order
  IntersectOptions options;
  AuditProvenance provenance;

  const IntersectionCell* cell(std::string_view a1, Level level, std::string_view a2) const;
  /// Weighted mean delta over non-skipped cells; nullopt when all are skipped.
  std::optional<double> average(std::string_view a1, Level level) const;
  /// |Avg_high - Avg_low|.
  std::optional<double> abs_delta_average(std::string_view a1) const;

  nlohmann::json to_json() const;
};

/// |mae_high - mae_low| for one intersection cell.
double cell_delta(double mae_a2_high, double mae_a2_low);

IntersectionReport intersect_audit(const TrainedModel& model, const EncodedDataset& test,
                                   std::span<const std::string> race, std::span<const std::string> religion,
                                   const IntersectOptions& options = {});
IntersectionReport intersect_audit(std::span<const double> y, std::span<const double> yhat,
                                   const EncodedDataset& test, std::span<const std::string> race,
                                   std::span<const std::string> religion, const IntersectOptions& options = {});

struct BlindSpotOptions {
  /// Single-feature delta below which a feature "looks fair"; defaults to the
  /// median single-feature delta.
  std::optional<double> fair_threshold;
  double multiple = 2.0;
};

struct BlindSpot {
  std::string feature;
  double single_delta = 0.0;
  double intersectional = 0.0;  // |dAvg| with the feature as A1
};

/// Flags features whose single-feature delta is below the fair threshold while
/// their |dAvg| exceeds multiple * threshold. Only features that appear as A1
/// in the report can be flagged.
std::vector<BlindSpot> blind_spot_screen(const AuditReport& single, const IntersectionReport& inter,
                                         const BlindSpotOptions& options = {});

/// Rows = religion features, Avg, |dAvg|; column pairs = (A1 High, A1 Low).
void write_intersection_csv(const IntersectionReport& report, std::ostream& out);
void write_intersection_markdown(const IntersectionReport& report, std::ostream& out);

}  // namespace fairaudit
