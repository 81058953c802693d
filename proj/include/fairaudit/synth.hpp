#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairaudit/dataset.hpp"

namespace fairaudit {

/// Synthetic ward-year tables with optional planted structure.
///
/// Tables: `identity` (race_* / religion_* proportions), `socio`
/// (socio_* numerics and an `area_type` categorical) and `crime`
/// (`crime_rate`, the target).
struct SynthConfig {
  std::size_t wards = 34;
  int year_from = 2016;
  int year_to = 2022;
  std::uint64_t seed = 0;

  std::size_t race_features = 6;
  std::size_t religion_features = 6;
  std::size_t numeric_features = 6;
  bool categorical = true;

  // Sensitive proportions ~ Beta(a, b). Static proportions are drawn once per
  // ward and jittered per year, like census figures; otherwise every row draws.
  double sensitive_a = 2.0;
  double sensitive_b = 2.0;
  bool static_sensitive = true;
  double sensitive_jitter = 0.01;

  double base_rate = 80.0;
  double noise = 1.0;
  /// Linear effect of the first race feature on the target.
  double sensitive_effect = 0.0;

  /// Extra zero-mean noise (stddev) on targets of rows in the High group of `noisy_feature`.
  std::optional<std::string> noisy_feature;
  double group_noise = 0.0;

  /// Extra slope on socio_0 for rows in the High group of `effect_feature`.
  std::optional<std::string> effect_feature;
  double group_effect = 0.0;

  /// Mean shift (in units of the within-year noise) added to the first
  /// `shifted_features` socio columns from `shift_from_year` on.
  std::size_t shifted_features = 0;
  double shift = 0.0;
  int shift_from_year = 2022;

  void validate() const;
  static SynthConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SynthData {
  FeatureSchema schema;
  std::vector<RawTable> tables;
};

std::vector<std::string> synth_race_names(std::size_t n);
std::vector<std::string> synth_religion_names(std::size_t n);

SynthData generate_fixture(const SynthConfig& config);

/// Writes one CSV per table plus schema.json; returns the CSV paths.
std::vector<std::string> write_fixture(const SynthData& data, const std::string& directory);

}  // namespace fairaudit
