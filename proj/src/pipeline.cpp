#include "fairaudit/pipeline.hpp"

#include <numeric>

#include "fairaudit/fairness.hpp"

namespace fairaudit {

JoinedTable ingest(const FeatureSchema& schema, std::span<const std::string> paths) {
  schema.validate();
  return join_and_clean(load_tables(paths, schema), schema);
}

EncodedDataset encode_all(const JoinedTable& table) {
  std::vector<std::size_t> all(table.rows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto data = encode(table, all);
  attach_thresholds(data);
  return data;
}

PreparedSplit prepare_split(const JoinedTable& table, const SplitSpec& spec) {
  spec.validate();
  std::vector<int> years;
  years.reserve(table.rows.size());
  for (const auto& r : table.rows) years.push_back(r.year);

  PreparedSplit out;
  out.indices = split_indices(years, spec);
  auto full = apply_encoder(table, fit_encoder(table, out.indices.train));
  // Thresholds come from every row, before the split.
  attach_thresholds(full);
  out.train = full.subset(out.indices.train);
  out.test = full.subset(out.indices.test);
  return out;
}

}  // namespace fairaudit
