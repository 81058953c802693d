#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace fairaudit {

enum class ColumnKind { numeric, categorical, target };
enum class SensitiveClass { race, religion };

std::string_view to_string(ColumnKind kind);
std::string_view to_string(SensitiveClass cls);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::optional<SensitiveClass> sensitive_class;
};

/// Column contract of the ward-year table. Loaded from a JSON manifest:
///
///   { "columns": [ {"name": "...", "kind": "numeric|categorical|target",
///                   "sensitive_class": "race|religion"} ],
///     "target": "crime_rate", "year_range": [2016, 2022] }
///
/// Optional keys: "ward_column", "year_column", "max_missing_fraction".
struct FeatureSchema {
  std::vector<ColumnSpec> columns;
  std::string ward_column = "ward";
  std::string year_column = "year";
  int year_min = 2016;
  int year_max = 2022;
  double max_missing_fraction = 0.2;

  void validate() const;

  std::size_t target_index() const;
  const ColumnSpec& target() const { return columns[target_index()]; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> sensitive(std::optional<SensitiveClass> cls = std::nullopt) const;

  static FeatureSchema from_json(const nlohmann::json& j);
  static FeatureSchema load(const std::string& path);
  nlohmann::json to_json() const;
};

/// A raw cell: missing, a number, or a categorical level.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

struct RawRow {
  std::string ward;
  int year = 0;
  std::vector<Cell> values;  // aligned with RawTable::columns
};

/// One source CSV restricted to schema columns.
struct RawTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<RawRow> rows;

  std::optional<std::size_t> column_index(std::string_view column) const;
};

struct LoadOptions {
  /// Rows outside the schema year range are dropped on load.
  bool drop_out_of_range_years = true;
};

std::vector<RawTable> load_tables(std::span<const std::string> paths, const FeatureSchema& schema,
                                  const LoadOptions& options = {});
RawTable parse_table(const std::string& name, std::string_view csv_text, const FeatureSchema& schema,
                     const LoadOptions& options = {});

/// The inner join of all topic tables, one row per (ward, year), values in
/// schema column order.
struct JoinedTable {
  FeatureSchema schema;
  std::vector<RawRow> rows;

  struct Stats {
    std::size_t joined = 0;
    std::size_t dropped_missing_target = 0;
    std::size_t dropped_sparse = 0;
    std::size_t imputed_cells = 0;
  } stats;

  std::vector<double> numeric_column(std::string_view name) const;
};

JoinedTable join_and_clean(const std::vector<RawTable>& tables, const FeatureSchema& schema);

enum class FeatureType { numeric, one_hot };

struct EncodedFeature {
  std::string name;
  FeatureType type = FeatureType::numeric;
  std::string source;  // originating schema column
  std::string level;   // one-hot level; empty for numeric
};

struct ScalerParams {
  std::string column;
  double mean = 0.0;
  double stddev = 1.0;
  bool zero_variance = false;
};

/// Everything needed to re-apply an encoding to new rows.
struct EncoderState {
  std::vector<EncodedFeature> features;
  std::vector<ScalerParams> scalers;                          // one per numeric column
  std::map<std::string, std::map<std::string, std::size_t>> levels;  // column -> level -> feature index
};

struct Sample {
  std::string ward;
  int year = 0;
  std::vector<double> x;
  double y = 0.0;               // crimes per 1000 population, raw units
  std::vector<double> sensitive;  // raw sensitive proportions, aligned with sensitive_names
};

/// Encoded ward-year samples. Sensitive columns stay in `x` (z-scored) and
/// are additionally kept in raw form as metadata so group membership can be
/// computed even when a model does not see them.
struct EncodedDataset {
  std::vector<Sample> samples;
  EncoderState encoder;
  std::vector<std::string> sensitive_names;
  std::map<std::string, SensitiveClass> sensitive_classes;
  /// Population thresholds T_phi, computed once over all rows before splitting.
  std::map<std::string, double> thresholds;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::size_t num_features() const { return encoder.features.size(); }
  std::vector<std::string> feature_names() const;
  std::optional<std::size_t> feature_index(std::string_view name) const;
  std::optional<std::size_t> sensitive_index(std::string_view name) const;

  /// Values used for grouping: the raw sensitive metadata when present,
  /// otherwise the encoded column.
  std::vector<double> group_values(std::string_view feature) const;

  Eigen::MatrixXd matrix() const;
  Eigen::VectorXd targets() const;
  std::vector<double> target_vector() const;

  EncodedDataset subset(std::span<const std::size_t> indices) const;
  /// Removes encoded columns whose name or source column is listed.
  EncodedDataset without_features(std::span<const std::string> names) const;
  std::uint64_t fingerprint() const;
};

EncoderState fit_encoder(const JoinedTable& table, std::span<const std::size_t> fit_on);
EncodedDataset apply_encoder(const JoinedTable& table, const EncoderState& state);
/// fit_encoder on `fit_on`, then apply to every row of `table`.
EncodedDataset encode(const JoinedTable& table, std::span<const std::size_t> fit_on);

/// Recovers the categorical level of `column` for one sample; empty string
/// for an all-zeros block.
std::string decode_level(const EncodedDataset& data, std::size_t sample, std::string_view column);

struct TemporalSplit {
  std::vector<int> train_years;
  std::vector<int> test_years;
};

struct RandomSplit {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct SplitSpec {
  std::variant<TemporalSplit, RandomSplit> mode;

  void validate() const;
  std::string label() const;
  static SplitSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Partition of sample positions. Random mode shuffles with the seed and
/// takes the last ceil(test_fraction * n) positions as test.
SplitIndices split_indices(std::span<const int> years, const SplitSpec& spec);
std::pair<EncodedDataset, EncodedDataset> split(const EncodedDataset& data, const SplitSpec& spec);

std::vector<double> min_max_scale(std::span<const double> values);

/// Encoded dataset as CSV: feature columns in stored order, then
/// __ward, __year, __target.
void write_encoded_csv(const EncodedDataset& data, std::ostream& out);

}  // namespace fairaudit
