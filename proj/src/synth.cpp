#include "fairaudit/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "fairaudit/csv.hpp"
#include "fairaudit/error.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

namespace {

constexpr std::array<const char*, 6> kRace{"indian", "chinese", "white", "middle_east", "caribbean", "africa"};
constexpr std::array<const char*, 6> kReligion{"no_religion", "christian", "buddhist", "hindu", "jewish", "muslim"};
constexpr std::array<const char*, 3> kAreas{"urban", "suburban", "rural"};
constexpr std::array<double, 3> kAreaOffset{4.0, 0.0, -3.0};

std::vector<std::string> names_for(const char* prefix, const auto& base, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(std::string(prefix) + (i < base.size() ? std::string(base[i]) : "extra_" + std::to_string(i + 1)));
  return out;
}

double socio_coefficient(std::size_t k) {
  static constexpr std::array<double, 6> c{4.0, -3.0, 2.0, -1.5, 1.0, 0.5};
  return k < c.size() ? c[k] : 1.0 / static_cast<double>(k + 1);
}

}  // namespace

std::vector<std::string> synth_race_names(std::size_t n) { return names_for("race_", kRace, n); }
std::vector<std::string> synth_religion_names(std::size_t n) { return names_for("religion_", kReligion, n); }

void SynthConfig::validate() const {
  if (wards < 2) fail(ErrorCode::invalid_config, "synthetic fixture needs at least two wards");
  if (year_to <= year_from) fail(ErrorCode::invalid_config, "synthetic fixture needs at least two years");
  if (race_features == 0 || religion_features == 0)
    fail(ErrorCode::invalid_config, "synthetic fixture needs race and religion features");
  if (!(sensitive_a > 0.0) || !(sensitive_b > 0.0)) fail(ErrorCode::invalid_config, "Beta parameters must be positive");
  if (!(noise >= 0.0) || !(group_noise >= 0.0) || !(sensitive_jitter >= 0.0))
    fail(ErrorCode::invalid_config, "noise levels must be >= 0");
  if (shifted_features > numeric_features) fail(ErrorCode::invalid_config, "more shifted features than socio features");
  if (group_effect != 0.0 && numeric_features == 0) fail(ErrorCode::invalid_config, "group effect needs socio_0");
  const auto race = synth_race_names(race_features), religion = synth_religion_names(religion_features);
  auto known = [&](const std::optional<std::string>& f) {
    return !f || std::find(race.begin(), race.end(), *f) != race.end() ||
           std::find(religion.begin(), religion.end(), *f) != religion.end();
  };
  if (!known(noisy_feature)) fail(ErrorCode::invalid_config, "unknown noisy_feature '" + *noisy_feature + "'");
  if (!known(effect_feature)) fail(ErrorCode::invalid_config, "unknown effect_feature '" + *effect_feature + "'");
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    c.wards = j.value("wards", c.wards);
    if (j.contains("years")) {
      c.year_from = j.at("years").at(0).get<int>();
      c.year_to = j.at("years").at(1).get<int>();
    }
    c.year_from = j.value("year_from", c.year_from);
    c.year_to = j.value("year_to", c.year_to);
    c.seed = j.value("seed", c.seed);
    c.race_features = j.value("race_features", c.race_features);
    c.religion_features = j.value("religion_features", c.religion_features);
    c.numeric_features = j.value("numeric_features", c.numeric_features);
    c.categorical = j.value("categorical", c.categorical);
    c.sensitive_a = j.value("sensitive_a", c.sensitive_a);
    c.sensitive_b = j.value("sensitive_b", c.sensitive_b);
    c.static_sensitive = j.value("static_sensitive", c.static_sensitive);
    c.sensitive_jitter = j.value("sensitive_jitter", c.sensitive_jitter);
    c.base_rate = j.value("base_rate", c.base_rate);
    c.noise = j.value("noise", c.noise);
    c.sensitive_effect = j.value("sensitive_effect", c.sensitive_effect);
    if (j.contains("noisy_feature") && !j.at("noisy_feature").is_null()) c.noisy_feature = j.at("noisy_feature").get<std::string>();
    c.group_noise = j.value("group_noise", c.group_noise);
    if (j.contains("effect_feature") && !j.at("effect_feature").is_null())
      c.effect_feature = j.at("effect_feature").get<std::string>();
    c.group_effect = j.value("group_effect", c.group_effect);
    c.shifted_features = j.value("shifted_features", c.shifted_features);
    c.shift = j.value("shift", c.shift);
    c.shift_from_year = j.value("shift_from_year", c.shift_from_year);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, std::string("synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json j = {{"wards", wards},
                      {"year_from", year_from},
                      {"year_to", year_to},
                      {"seed", seed},
                      {"race_features", race_features},
                      {"religion_features", religion_features},
                      {"numeric_features", numeric_features},
                      {"categorical", categorical},
                      {"sensitive_a", sensitive_a},
                      {"sensitive_b", sensitive_b},
                      {"static_sensitive", static_sensitive},
                      {"sensitive_jitter", sensitive_jitter},
                      {"base_rate", base_rate},
                      {"noise", noise},
                      {"sensitive_effect", sensitive_effect},
                      {"group_noise", group_noise},
                      {"group_effect", group_effect},
                      {"shifted_features", shifted_features},
                      {"shift", shift},
                      {"shift_from_year", shift_from_year}};
  if (noisy_feature) j["noisy_feature"] = *noisy_feature;
  if (effect_feature) j["effect_feature"] = *effect_feature;
  return j;
}

SynthData generate_fixture(const SynthConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, {"synth"}));
  const auto race = synth_race_names(config.race_features);
  const auto religion = synth_religion_names(config.religion_features);
  std::vector<std::string> sensitive = race;
  sensitive.insert(sensitive.end(), religion.begin(), religion.end());
  const std::size_t ns = sensitive.size();
  const int years = config.year_to - config.year_from + 1;
  const std::size_t rows = config.wards * static_cast<std::size_t>(years);

  std::vector<std::string> ward_names;
  for (std::size_t w = 0; w < config.wards; ++w) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "W%02zu", w + 1);
    ward_names.emplace_back(buf);
  }

  // Sensitive proportions, row-major (ward, year).
  std::vector<std::vector<double>> prop(rows, std::vector<double>(ns));
  std::vector<std::size_t> area(config.wards);
  for (std::size_t w = 0; w < config.wards; ++w) {
    std::vector<double> base(ns);
    for (auto& b : base) b = rng.beta(config.sensitive_a, config.sensitive_b);
    area[w] = static_cast<std::size_t>(rng.below(kAreas.size()));
    for (int t = 0; t < years; ++t) {
      auto& p = prop[w * static_cast<std::size_t>(years) + static_cast<std::size_t>(t)];
      for (std::size_t k = 0; k < ns; ++k) {
        const double v = config.static_sensitive ? base[k] + config.sensitive_jitter * rng.normal()
                                                 : rng.beta(config.sensitive_a, config.sensitive_b);
        p[k] = std::clamp(v, 0.0, 1.0);
      }
    }
  }

  // Midpoint thresholds over every generated row, as the audit computes them.
  auto high_mask = [&](const std::optional<std::string>& feature) {
    std::vector<char> mask(rows, 0);
    if (!feature) return mask;
    const auto k = static_cast<std::size_t>(std::find(sensitive.begin(), sensitive.end(), *feature) - sensitive.begin());
    double lo = 1.0, hi = 0.0;
    for (const auto& p : prop) {
      lo = std::min(lo, p[k]);
      hi = std::max(hi, p[k]);
    }
    const double T = 0.5 * (lo + hi);
    for (std::size_t r = 0; r < rows; ++r) mask[r] = hi > lo && prop[r][k] >= T;
    return mask;
  };
  const auto noisy = high_mask(config.noisy_feature);
  const auto effect = high_mask(config.effect_feature);

  SynthData out;
  auto& schema = out.schema;
  schema.year_min = config.year_from;
  schema.year_max = config.year_to;
  for (const auto& n : race) schema.columns.push_back({n, ColumnKind::numeric, SensitiveClass::race});
  for (const auto& n : religion) schema.columns.push_back({n, ColumnKind::numeric, SensitiveClass::religion});
  std::vector<std::string> socio;
  for (std::size_t k = 0; k < config.numeric_features; ++k) {
    socio.push_back("socio_" + std::to_string(k));
    schema.columns.push_back({socio.back(), ColumnKind::numeric, std::nullopt});
  }
  if (config.categorical) schema.columns.push_back({"area_type", ColumnKind::categorical, std::nullopt});
  schema.columns.push_back({"crime_rate", ColumnKind::target, std::nullopt});

  RawTable identity{"identity", sensitive, {}};
  RawTable socio_table{"socio", socio, {}};
  if (config.categorical) socio_table.columns.push_back("area_type");
  RawTable crime{"crime", {"crime_rate"}, {}};

  for (std::size_t w = 0; w < config.wards; ++w) {
    for (int t = 0; t < years; ++t) {
      const std::size_t r = w * static_cast<std::size_t>(years) + static_cast<std::size_t>(t);
      const int year = config.year_from + t;
      RawRow id{ward_names[w], year, {}};
      for (double v : prop[r]) id.values.emplace_back(v);
      identity.rows.push_back(std::move(id));

      RawRow so{ward_names[w], year, {}};
      double y = config.base_rate + config.sensitive_effect * prop[r][0];
      for (std::size_t k = 0; k < config.numeric_features; ++k) {
        double v = rng.normal();
        if (k < config.shifted_features && year >= config.shift_from_year) v += config.shift;
        so.values.emplace_back(v);
        y += socio_coefficient(k) * v;
        if (k == 0 && effect[r]) y += config.group_effect * v;
      }
      if (config.categorical) {
        so.values.emplace_back(std::string(kAreas[area[w]]));
        y += kAreaOffset[area[w]];
      }
      socio_table.rows.push_back(std::move(so));

      y += config.noise * rng.normal();
      if (noisy[r]) y += config.group_noise * rng.normal();
      crime.rows.push_back({ward_names[w], year, {Cell(std::max(0.0, y))}});
    }
  }
  out.tables = {std::move(identity), std::move(socio_table), std::move(crime)};
  return out;
}

std::vector<std::string> write_fixture(const SynthData& data, const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) fail(ErrorCode::io, "cannot create '" + directory + "': " + ec.message());

  std::vector<std::string> paths;
  for (const auto& t : data.tables) {
    const auto path = (fs::path(directory) / (t.name + ".csv")).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io, "cannot write '" + path + "'");
    csv::Record header{data.schema.ward_column, data.schema.year_column};
    header.insert(header.end(), t.columns.begin(), t.columns.end());
    csv::write_record(f, header);
    for (const auto& row : t.rows) {
      csv::Record rec{row.ward, std::to_string(row.year)};
      for (const auto& c : row.values) {
        if (const auto* d = std::get_if<double>(&c)) rec.push_back(csv::exact(*d));
        else if (const auto* s = std::get_if<std::string>(&c)) rec.push_back(*s);
        else rec.emplace_back();
      }
      csv::write_record(f, rec);
    }
    paths.push_back(path);
  }
  const auto schema_path = (fs::path(directory) / "schema.json").string();
  std::ofstream f(schema_path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot write '" + schema_path + "'");
  f << data.schema.to_json().dump(2) << '\n';
  return paths;
}

}  // namespace fairaudit
