#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/rng.hpp"
#include "fairaudit/synth.hpp"

namespace testsupport {

using namespace fairaudit;

// Hand-built numeric dataset. Sensitive columns are metadata only unless they
// also appear in `features`.
inline EncodedDataset make_dataset(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                                   const std::map<std::string, std::vector<double>>& sensitive = {},
                                   std::vector<std::string> features = {}) {
  EncodedDataset d;
  const std::size_t p = X.empty() ? features.size() : X.front().size();
  if (features.empty())
    for (std::size_t j = 0; j < p; ++j) features.push_back("f" + std::to_string(j));
  for (const auto& name : features) d.encoder.features.push_back({name, FeatureType::numeric, name, ""});
  for (const auto& [name, values] : sensitive) {
    (void)values;
    d.sensitive_names.push_back(name);
    d.sensitive_classes[name] = SensitiveClass::race;
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    Sample s;
    s.ward = "W" + std::to_string(i);
    s.year = 2016 + static_cast<int>(i % 7);
    s.x = X[i];
    s.y = y[i];
    for (const auto& [name, values] : sensitive) s.sensitive.push_back(values[i]);
    d.samples.push_back(std::move(s));
  }
  attach_thresholds(d);
  return d;
}

inline JoinedTable synth_table(const SynthConfig& cfg) {
  const auto data = generate_fixture(cfg);
  return join_and_clean(data.tables, data.schema);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fairaudit_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::vector<double> normals(Rng& rng, std::size_t n, double mean = 0.0, double sd = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = mean + sd * rng.normal();
  return v;
}

}  // namespace testsupport
