#pragma once

#include <span>
#include <string>

#include "fairaudit/dataset.hpp"

namespace fairaudit {

/// load_tables + join_and_clean.
JoinedTable ingest(const FeatureSchema& schema, std::span<const std::string> paths);

/// Encodes every row with parameters fitted on all rows and attaches the
/// population thresholds of the sensitive features.
EncodedDataset encode_all(const JoinedTable& table);

struct PreparedSplit {
  EncodedDataset train;
  EncodedDataset test;
  SplitIndices indices;  // positions in the joined table
};

/// Splits the joined rows, fits the encoder on the training rows only and
/// carries the population thresholds onto both sides.
PreparedSplit prepare_split(const JoinedTable& table, const SplitSpec& spec);

}  // namespace fairaudit
