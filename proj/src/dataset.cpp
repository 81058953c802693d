#include "fairaudit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fairaudit/csv.hpp"
#include "fairaudit/error.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_missing_token(std::string_view s) {
  static const std::set<std::string, std::less<>> tokens = {"", "na", "n/a", "nan", "null", "none", "-", ".."};
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return tokens.count(lower) > 0;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (is_missing_token(s)) return std::nullopt;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "target") return ColumnKind::target;
  fail(ErrorCode::invalid_config, "unknown column kind '" + s + "'");
}

SensitiveClass sensitive_class_from_string(const std::string& s) {
  if (s == "race") return SensitiveClass::race;
  if (s == "religion") return SensitiveClass::religion;
  fail(ErrorCode::invalid_config, "unknown sensitive class '" + s + "'");
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::target: return "target";
  }
  return "numeric";
}

std::string_view to_string(SensitiveClass cls) { return cls == SensitiveClass::race ? "race" : "religion"; }

// ---------------------------------------------------------------------------
// FeatureSchema

void FeatureSchema::validate() const {
  std::set<std::string> names;
  std::size_t targets = 0;
  for (const auto& c : columns) {
    if (c.name.empty()) fail(ErrorCode::invalid_config, "column with empty name");
    if (!names.insert(c.name).second) fail(ErrorCode::invalid_config, "duplicate column '" + c.name + "'");
    if (c.name == ward_column || c.name == year_column)
      fail(ErrorCode::invalid_config, "key column '" + c.name + "' listed as a feature");
    if (c.kind == ColumnKind::target) ++targets;
    if (c.sensitive_class && c.kind != ColumnKind::numeric)
      fail(ErrorCode::invalid_config, "sensitive column '" + c.name + "' must be numeric");
  }
  if (targets != 1) fail(ErrorCode::invalid_config, "schema needs exactly one target column");
  if (year_min > year_max) fail(ErrorCode::invalid_config, "empty year range");
  if (!(max_missing_fraction >= 0.0 && max_missing_fraction <= 1.0))
    fail(ErrorCode::invalid_config, "max_missing_fraction must lie in [0, 1]");
}

std::size_t FeatureSchema::target_index() const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].kind == ColumnKind::target) return i;
  fail(ErrorCode::invalid_config, "schema has no target column");
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::string> FeatureSchema::sensitive(std::optional<SensitiveClass> cls) const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.sensitive_class && (!cls || *c.sensitive_class == *cls)) out.push_back(c.name);
  return out;
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
  FeatureSchema s;
  try {
    for (const auto& c : j.at("columns")) {
      ColumnSpec col;
      col.name = c.at("name").get<std::string>();
      col.kind = column_kind_from_string(c.value("kind", std::string("numeric")));
      if (c.contains("sensitive_class") && !c.at("sensitive_class").is_null())
        col.sensitive_class = sensitive_class_from_string(c.at("sensitive_class").get<std::string>());
      s.columns.push_back(std::move(col));
    }
    if (j.contains("target")) {
      const auto target = j.at("target").get<std::string>();
      bool found = false;
      for (auto& c : s.columns) {
        if (c.name == target) {
          c.kind = ColumnKind::target;
          found = true;
        } else if (c.kind == ColumnKind::target) {
          fail(ErrorCode::invalid_config, "column '" + c.name + "' marked target but target is '" + target + "'");
        }
      }
      if (!found) s.columns.push_back({target, ColumnKind::target, std::nullopt});
    }
    if (j.contains("year_range")) {
      const auto& r = j.at("year_range");
      s.year_min = r.at(0).get<int>();
      s.year_max = r.at(1).get<int>();
    }
    s.ward_column = j.value("ward_column", s.ward_column);
    s.year_column = j.value("year_column", s.year_column);
    s.max_missing_fraction = j.value("max_missing_fraction", s.max_missing_fraction);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, std::string("schema manifest: ") + e.what());
  }
  s.validate();
  return s;
}

FeatureSchema FeatureSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open schema " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  std::string target_name;
  for (const auto& c : columns) {
    nlohmann::json col = {{"name", c.name}, {"kind", std::string(to_string(c.kind))}};
    if (c.sensitive_class) col["sensitive_class"] = std::string(to_string(*c.sensitive_class));
    if (c.kind == ColumnKind::target) target_name = c.name;
    cols.push_back(std::move(col));
  }
  return {{"columns", cols},
          {"target", target_name},
          {"year_range", {year_min, year_max}},
          {"ward_column", ward_column},
          {"year_column", year_column},
          {"max_missing_fraction", max_missing_fraction}};
}

// ---------------------------------------------------------------------------
// Loading

std::optional<std::size_t> RawTable::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == column) return i;
  return std::nullopt;
}

RawTable parse_table(const std::string& name, std::string_view csv_text, const FeatureSchema& schema,
                     const LoadOptions& options) {
  const auto records = csv::parse(csv_text);
  if (records.empty()) fail(ErrorCode::parse, name + ": missing header row");

  const auto& header = records.front();
  std::optional<std::size_t> ward_col, year_col;
  std::vector<std::pair<std::size_t, std::size_t>> picked;  // (csv column, schema column)
  std::set<std::string> seen;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h(trim(header[i]));
    if (!seen.insert(h).second) fail(ErrorCode::parse, name + ": duplicate header '" + h + "'");
    if (h == schema.ward_column) ward_col = i;
    else if (h == schema.year_column) year_col = i;
    else if (auto idx = schema.index_of(h)) picked.emplace_back(i, *idx);
  }
  if (!ward_col) fail(ErrorCode::missing_column, name + ": no '" + schema.ward_column + "' column");
  if (!year_col) fail(ErrorCode::missing_column, name + ": no '" + schema.year_column + "' column");

  RawTable table;
  table.name = name;
  for (const auto& [csv_col, schema_col] : picked) table.columns.push_back(schema.columns[schema_col].name);

  std::set<std::pair<std::string, int>> keys;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    auto cell = [&](std::size_t i) -> std::string_view { return i < rec.size() ? trim(rec[i]) : std::string_view{}; };

    RawRow row;
    row.ward = std::string(cell(*ward_col));
    if (row.ward.empty()) fail(ErrorCode::parse, name + ": row " + std::to_string(r + 1) + " has an empty ward");
    const auto year_text = cell(*year_col);
    auto [ptr, ec] = std::from_chars(year_text.data(), year_text.data() + year_text.size(), row.year);
    if (ec != std::errc() || ptr != year_text.data() + year_text.size())
      fail(ErrorCode::parse, name + ": row " + std::to_string(r + 1) + " has year '" + std::string(year_text) + "'");
    if (row.year < schema.year_min || row.year > schema.year_max) {
      if (options.drop_out_of_range_years) continue;
      fail(ErrorCode::parse, name + ": year " + std::to_string(row.year) + " outside the schema range");
    }
    if (!keys.emplace(row.ward, row.year).second)
      fail(ErrorCode::duplicate_key, name + ": repeated (" + row.ward + ", " + std::to_string(row.year) + ")");

    for (const auto& [csv_col, schema_col] : picked) {
      const auto text = cell(csv_col);
      if (schema.columns[schema_col].kind == ColumnKind::categorical) {
        if (is_missing_token(text)) row.values.emplace_back(std::monostate{});
        else row.values.emplace_back(std::string(text));
      } else if (auto v = parse_number(text)) {
        row.values.emplace_back(*v);
      } else {
        row.values.emplace_back(std::monostate{});
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<RawTable> load_tables(std::span<const std::string> paths, const FeatureSchema& schema,
                                  const LoadOptions& options) {
  schema.validate();
  std::vector<RawTable> tables;
  std::set<std::string> covered;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    tables.push_back(parse_table(std::filesystem::path(path).stem().string(), buf.str(), schema, options));
    covered.insert(tables.back().columns.begin(), tables.back().columns.end());
  }
  for (const auto& c : schema.columns)
    if (!covered.count(c.name)) fail(ErrorCode::missing_column, "column '" + c.name + "' is absent from all files");
  return tables;
}

// ---------------------------------------------------------------------------
// Join and clean

std::vector<double> JoinedTable::numeric_column(std::string_view name) const {
  const auto idx = schema.index_of(name);
  if (!idx) fail(ErrorCode::missing_column, "no column '" + std::string(name) + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const auto* v = std::get_if<double>(&r.values[*idx]);
    if (!v) fail(ErrorCode::invalid_argument, "column '" + std::string(name) + "' is not numeric");
    out.push_back(*v);
  }
  return out;
}

JoinedTable join_and_clean(const std::vector<RawTable>& tables, const FeatureSchema& schema) {
  schema.validate();
  using Key = std::pair<int, std::string>;  // (year, ward) so the map iterates in output order
  if (tables.empty()) fail(ErrorCode::empty_join, "no tables to join");

  std::vector<std::map<Key, std::size_t>> index(tables.size());
  for (std::size_t t = 0; t < tables.size(); ++t)
    for (std::size_t r = 0; r < tables[t].rows.size(); ++r)
      index[t].emplace(Key{tables[t].rows[r].year, tables[t].rows[r].ward}, r);

  // Source (table, column) of each schema column: first table that carries it.
  std::vector<std::optional<std::pair<std::size_t, std::size_t>>> source(schema.columns.size());
  for (std::size_t c = 0; c < schema.columns.size(); ++c)
    for (std::size_t t = 0; t < tables.size() && !source[c]; ++t)
      if (auto ci = tables[t].column_index(schema.columns[c].name)) source[c] = std::make_pair(t, *ci);

  JoinedTable out;
  out.schema = schema;
  const std::size_t target = schema.target_index();
  const std::size_t n_features = schema.columns.size() - 1;

  for (const auto& [key, r0] : index[0]) {
    bool everywhere = true;
    for (std::size_t t = 1; t < tables.size() && everywhere; ++t) everywhere = index[t].count(key) > 0;
    if (!everywhere) continue;
    ++out.stats.joined;

    RawRow row;
    row.year = key.first;
    row.ward = key.second;
    row.values.resize(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      if (!source[c]) continue;
      const auto [t, ci] = *source[c];
      row.values[c] = tables[t].rows[index[t].at(key)].values[ci];
    }

    if (is_missing(row.values[target])) {
      ++out.stats.dropped_missing_target;
      continue;
    }
    std::size_t missing = 0;
    for (std::size_t c = 0; c < row.values.size(); ++c)
      if (c != target && is_missing(row.values[c])) ++missing;
    if (n_features > 0 && static_cast<double>(missing) / static_cast<double>(n_features) > schema.max_missing_fraction) {
      ++out.stats.dropped_sparse;
      continue;
    }
    if (std::get<double>(row.values[target]) < 0.0)
      fail(ErrorCode::invalid_argument, "negative target for (" + row.ward + ", " + std::to_string(row.year) + ")");
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) fail(ErrorCode::empty_join, "no (ward, year) rows survive the join and cleaning");

  // Median imputation for numerics, most frequent level for categoricals.
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (c == target) continue;
    const bool categorical = schema.columns[c].kind == ColumnKind::categorical;
    std::vector<double> observed;
    std::map<std::string, std::size_t> counts;
    for (const auto& r : out.rows) {
      if (const auto* v = std::get_if<double>(&r.values[c])) observed.push_back(*v);
      if (const auto* s = std::get_if<std::string>(&r.values[c])) ++counts[*s];
    }
    Cell fill;
    if (categorical) {
      if (counts.empty()) fail(ErrorCode::missing_column, "column '" + schema.columns[c].name + "' has no values");
      auto best = counts.begin();
      for (auto it = counts.begin(); it != counts.end(); ++it)
        if (it->second > best->second) best = it;
      fill = best->first;
    } else {
      if (observed.empty()) fail(ErrorCode::missing_column, "column '" + schema.columns[c].name + "' has no values");
      fill = median_of(std::move(observed));
    }
    for (auto& r : out.rows) {
      if (is_missing(r.values[c])) {
        r.values[c] = fill;
        ++out.stats.imputed_cells;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoding

std::vector<std::string> EncodedDataset::feature_names() const {
  std::vector<std::string> out;
  out.reserve(encoder.features.size());
  for (const auto& f : encoder.features) out.push_back(f.name);
  return out;
}

std::optional<std::size_t> EncodedDataset::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < encoder.features.size(); ++i)
    if (encoder.features[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> EncodedDataset::sensitive_index(std::string_view name) const {
  for (std::size_t i = 0; i < sensitive_names.size(); ++i)
    if (sensitive_names[i] == name) return i;
  return std::nullopt;
}

std::vector<double> EncodedDataset::group_values(std::string_view feature) const {
  std::vector<double> out;
  out.reserve(samples.size());
  if (auto s = sensitive_index(feature)) {
    for (const auto& smp : samples) out.push_back(smp.sensitive[*s]);
  } else if (auto f = feature_index(feature)) {
    for (const auto& smp : samples) out.push_back(smp.x[*f]);
  } else {
    fail(ErrorCode::missing_column, "no feature '" + std::string(feature) + "'");
  }
  return out;
}

Eigen::MatrixXd EncodedDataset::matrix() const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(num_features()));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < samples[i].x.size(); ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = samples[i].x[j];
  return X;
}

Eigen::VectorXd EncodedDataset::targets() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) y(static_cast<Eigen::Index>(i)) = samples[i].y;
  return y;
}

std::vector<double> EncodedDataset::target_vector() const {
  std::vector<double> y;
  y.reserve(samples.size());
  for (const auto& s : samples) y.push_back(s.y);
  return y;
}

EncodedDataset EncodedDataset::subset(std::span<const std::size_t> indices) const {
  EncodedDataset out;
  out.encoder = encoder;
  out.sensitive_names = sensitive_names;
  out.sensitive_classes = sensitive_classes;
  out.thresholds = thresholds;
  out.samples.reserve(indices.size());
  for (auto i : indices) {
    if (i >= samples.size()) fail(ErrorCode::invalid_argument, "subset index out of range");
    out.samples.push_back(samples[i]);
  }
  return out;
}

EncodedDataset EncodedDataset::without_features(std::span<const std::string> names) const {
  const std::set<std::string, std::less<>> drop(names.begin(), names.end());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < encoder.features.size(); ++i) {
    const auto& f = encoder.features[i];
    if (!drop.count(f.name) && !drop.count(f.source)) keep.push_back(i);
  }

  EncodedDataset out;
  out.sensitive_names = sensitive_names;
  out.sensitive_classes = sensitive_classes;
  out.thresholds = thresholds;
  for (auto i : keep) out.encoder.features.push_back(encoder.features[i]);
  for (const auto& s : encoder.scalers)
    if (!drop.count(s.column)) out.encoder.scalers.push_back(s);
  for (std::size_t j = 0; j < out.encoder.features.size(); ++j) {
    const auto& f = out.encoder.features[j];
    if (f.type == FeatureType::one_hot) out.encoder.levels[f.source][f.level] = j;
  }
  out.samples.reserve(samples.size());
  for (const auto& s : samples) {
    Sample t = s;
    t.x.clear();
    for (auto i : keep) t.x.push_back(s.x[i]);
    out.samples.push_back(std::move(t));
  }
  return out;
}

std::uint64_t EncodedDataset::fingerprint() const {
  Fnv1a h;
  for (const auto& f : encoder.features) h.str(f.name);
  for (const auto& s : samples) {
    h.str(s.ward);
    h.u64(static_cast<std::uint64_t>(s.year));
    h.f64(s.y);
    for (double v : s.x) h.f64(v);
  }
  return h.digest();
}

EncoderState fit_encoder(const JoinedTable& table, std::span<const std::size_t> fit_on) {
  if (fit_on.empty()) fail(ErrorCode::invalid_argument, "encoder fit set is empty");
  const auto& schema = table.schema;
  EncoderState state;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& col = schema.columns[c];
    if (col.kind == ColumnKind::target) continue;
    if (col.kind == ColumnKind::numeric) {
      double sum = 0.0;
      for (auto i : fit_on) sum += std::get<double>(table.rows.at(i).values[c]);
      const double mean = sum / static_cast<double>(fit_on.size());
      double ss = 0.0;
      for (auto i : fit_on) {
        const double d = std::get<double>(table.rows[i].values[c]) - mean;
        ss += d * d;
      }
      const double sd = std::sqrt(ss / static_cast<double>(fit_on.size()));
      ScalerParams p{col.name, mean, sd, false};
      if (!(sd > 0.0)) {
        p.stddev = 1.0;
        p.zero_variance = true;
      }
      state.scalers.push_back(p);
      state.features.push_back({col.name, FeatureType::numeric, col.name, ""});
    } else {
      std::set<std::string> levels;
      for (auto i : fit_on) levels.insert(std::get<std::string>(table.rows.at(i).values[c]));
      auto& map = state.levels[col.name];
      for (const auto& level : levels) {
        map[level] = state.features.size();
        state.features.push_back({col.name + "=" + level, FeatureType::one_hot, col.name, level});
      }
    }
  }
  return state;
}

EncodedDataset apply_encoder(const JoinedTable& table, const EncoderState& state) {
  const auto& schema = table.schema;
  const std::size_t target = schema.target_index();

  EncodedDataset out;
  out.encoder = state;
  out.sensitive_names = schema.sensitive();
  for (const auto& c : schema.columns)
    if (c.sensitive_class) out.sensitive_classes[c.name] = *c.sensitive_class;

  std::map<std::string, const ScalerParams*> scalers;
  for (const auto& s : state.scalers) scalers[s.column] = &s;
  std::vector<std::size_t> sensitive_cols;
  for (const auto& name : out.sensitive_names) sensitive_cols.push_back(*schema.index_of(name));

  out.samples.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Sample s;
    s.ward = row.ward;
    s.year = row.year;
    s.y = std::get<double>(row.values[target]);
    s.x.assign(state.features.size(), 0.0);
    std::size_t j = 0;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const auto& col = schema.columns[c];
      if (col.kind == ColumnKind::target) continue;
      if (col.kind == ColumnKind::numeric) {
        const auto* p = scalers.at(col.name);
        const double v = std::get<double>(row.values[c]);
        s.x[j++] = (v - p->mean) / p->stddev;
      } else {
        const auto& levels = state.levels.at(col.name);
        const auto it = levels.find(std::get<std::string>(row.values[c]));
        if (it != levels.end()) s.x[it->second] = 1.0;  // unseen level -> all zeros
        j += levels.size();
      }
    }
    for (double v : s.x)
      if (!std::isfinite(v))
        fail(ErrorCode::non_finite_feature, "non-finite encoded value for (" + s.ward + ", " + std::to_string(s.year) + ")");
    for (auto c : sensitive_cols) s.sensitive.push_back(std::get<double>(row.values[c]));
    out.samples.push_back(std::move(s));
  }
  return out;
}

EncodedDataset encode(const JoinedTable& table, std::span<const std::size_t> fit_on) {
  return apply_encoder(table, fit_encoder(table, fit_on));
}

std::string decode_level(const EncodedDataset& data, std::size_t sample, std::string_view column) {
  const auto it = data.encoder.levels.find(std::string(column));
  if (it == data.encoder.levels.end()) fail(ErrorCode::missing_column, "no categorical column '" + std::string(column) + "'");
  for (const auto& [level, j] : it->second)
    if (data.samples.at(sample).x[j] == 1.0) return level;
  return {};
}

// ---------------------------------------------------------------------------
// Splits

void SplitSpec::validate() const {
  if (const auto* t = std::get_if<TemporalSplit>(&mode)) {
    if (t->train_years.empty() || t->test_years.empty())
      fail(ErrorCode::invalid_argument, "temporal split needs train and test years");
    for (int y : t->train_years)
      if (std::find(t->test_years.begin(), t->test_years.end(), y) != t->test_years.end())
        fail(ErrorCode::invalid_argument, "year " + std::to_string(y) + " is in both train and test");
  } else {
    const auto& r = std::get<RandomSplit>(mode);
    if (!(r.test_fraction > 0.0 && r.test_fraction < 1.0))
      fail(ErrorCode::invalid_argument, "test_fraction must lie in (0, 1)");
  }
}

std::string SplitSpec::label() const { return std::holds_alternative<TemporalSplit>(mode) ? "temporal" : "random"; }

SplitSpec SplitSpec::from_json(const nlohmann::json& j) {
  SplitSpec s;
  try {
    const auto m = j.at("mode").get<std::string>();
    if (m == "temporal") {
      s.mode = TemporalSplit{j.at("train_years").get<std::vector<int>>(), j.at("test_years").get<std::vector<int>>()};
    } else if (m == "random") {
      s.mode = RandomSplit{j.value("test_fraction", 0.2), j.value("seed", std::uint64_t{0})};
    } else {
      fail(ErrorCode::invalid_config, "unknown split mode '" + m + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, std::string("split: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json SplitSpec::to_json() const {
  if (const auto* t = std::get_if<TemporalSplit>(&mode))
    return {{"mode", "temporal"}, {"train_years", t->train_years}, {"test_years", t->test_years}};
  const auto& r = std::get<RandomSplit>(mode);
  return {{"mode", "random"}, {"test_fraction", r.test_fraction}, {"seed", r.seed}};
}

SplitIndices split_indices(std::span<const int> years, const SplitSpec& spec) {
  spec.validate();
  SplitIndices out;
  if (const auto* t = std::get_if<TemporalSplit>(&spec.mode)) {
    const std::set<int> train(t->train_years.begin(), t->train_years.end());
    const std::set<int> test(t->test_years.begin(), t->test_years.end());
    for (std::size_t i = 0; i < years.size(); ++i) {
      if (train.count(years[i])) out.train.push_back(i);
      else if (test.count(years[i])) out.test.push_back(i);
    }
  } else {
    const auto& r = std::get<RandomSplit>(spec.mode);
    const std::size_t n = years.size();
    const auto n_test = static_cast<std::size_t>(std::ceil(r.test_fraction * static_cast<double>(n) - 1e-9));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(r.seed);
    rng.shuffle(perm);
    out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n - std::min(n, n_test)));
    out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n - std::min(n, n_test)), perm.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
  }
  if (out.train.empty()) fail(ErrorCode::empty_side, "training side of the split is empty");
  if (out.test.empty()) fail(ErrorCode::empty_side, "test side of the split is empty");
  return out;
}

std::pair<EncodedDataset, EncodedDataset> split(const EncodedDataset& data, const SplitSpec& spec) {
  std::vector<int> years;
  years.reserve(data.size());
  for (const auto& s : data.samples) years.push_back(s.year);
  const auto idx = split_indices(years, spec);
  return {data.subset(idx.train), data.subset(idx.test)};
}

std::vector<double> min_max_scale(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::degenerate_range, "no values to scale");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo, max = *hi;
  if (!(max > min)) fail(ErrorCode::degenerate_range, "all values are equal");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back((v - min) / (max - min));
  return out;
}

void write_encoded_csv(const EncodedDataset& data, std::ostream& out) {
  csv::Record header = data.feature_names();
  header.insert(header.end(), {"__ward", "__year", "__target"});
  csv::write_record(out, header);
  for (const auto& s : data.samples) {
    csv::Record rec;
    rec.reserve(header.size());
    for (double v : s.x) rec.push_back(csv::exact(v));
    rec.push_back(s.ward);
    rec.push_back(std::to_string(s.year));
    rec.push_back(csv::exact(s.y));
    csv::write_record(out, rec);
  }
}

}  // namespace fairaudit
