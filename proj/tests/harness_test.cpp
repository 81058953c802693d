#include <filesystem>
#include <set>
#include <tuple>

#include "doctest.h"
#include "json.hpp"

#include "fairaudit/error.hpp"
#include "fairaudit/harness.hpp"
#include "support.hpp"

using namespace fairaudit;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config() {
  return nlohmann::json::parse(R"({
    "synthetic": {"wards": 8, "seed": 5, "noisy_feature": "race_indian", "group_noise": 3.0},
    "models": ["linear", {"kind": "decision_tree", "hyperparams": {"max_depth": 4}}],
    "splits": [{"name": "random", "mode": "random", "test_fraction": 0.3},
               {"name": "temporal", "mode": "temporal", "train_years": [2016,2017,2018,2019,2020,2021], "test_years": [2022]}],
    "sensitive_features": {"race": ["race_indian", "race_chinese"], "religion": ["religion_no_religion", "religion_christian"]},
    "mitigations": ["oversample", "reweight", {"method": "mixup", "alpha": 0.4}, "perturb"],
    "runs": 2, "master_seed": 11, "ablation": true, "intersection": true,
    "drift": {"cohort_a": [2016], "cohort_b": [2022]}})");
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = testsupport::slurp(e.path());
  return out;
}

}  // namespace

TEST_CASE("summarize uses the population stddev") {
  const std::vector<double> v{2, 4};
  CHECK(summarize(v).mean == 3.0);
  CHECK(summarize(v).stddev == 1.0);
  const std::vector<double> one{7};
  CHECK(summarize(one).stddev == 0.0);
  const std::vector<double> flat{5, 5, 5};
  CHECK(summarize(flat).stddev == 0.0);
  CHECK_THROWS_AS(summarize(std::vector<double>{}), Error);
}

TEST_CASE("effectiveness marks") {
  const auto a = effectiveness_mark(14.48, 9.77);
  CHECK(a.effective);
  CHECK(a.improvement == doctest::Approx(0.325).epsilon(1e-3));
  CHECK_FALSE(effectiveness_mark(10, 7.5).effective);
  CHECK_FALSE(effectiveness_mark(13.23, 24.39).effective);
  const auto z = effectiveness_mark(0, 1);
  CHECK_FALSE(z.effective);
  CHECK(z.zero_baseline);
}

TEST_CASE("cell seeds depend on every coordinate") {
  std::set<std::uint64_t> seen;
  for (const char* m : {"a", "b"})
    for (const char* s : {"x", "y"})
      for (const char* f : {"p", "q"})
        for (const char* g : {"none", "reweight"})
          for (std::size_t r = 0; r < 3; ++r) seen.insert(cell_seed(1, m, s, f, g, r));
  CHECK(seen.size() == 48);
  CHECK(cell_seed(1, "a", "x", "p", "none", 0) == cell_seed(1, "a", "x", "p", "none", 0));
}

TEST_CASE("config validation") {
  auto j = small_config();
  CHECK_NOTHROW(ExperimentConfig::from_json(j));
  for (const char* key : {"models", "splits"}) {
    auto bad = j;
    bad.erase(key);
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), Error);
  }
  auto bad = j;
  bad["runs"] = 0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), Error);
  bad = j;
  bad["models"] = {"svm"};
  try {
    ExperimentConfig::from_json(bad);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_config);
  }
}

TEST_CASE("minimal grid gives one run per feature") {
  auto j = small_config();
  j["models"] = {"linear"};
  j["splits"] = {j["splits"][0]};
  j["mitigations"] = nlohmann::json::array();
  j["runs"] = 1;
  j["ablation"] = false;
  j["intersection"] = false;
  j.erase("drift");
  const auto res = run_experiment(ExperimentConfig::from_json(j));
  CHECK(res.runs.size() == 4);
  CHECK(res.exit_code() == 0);
}

// Invariants: manifest completeness, baseline inclusion, marking consistency,
// and byte-identical artifacts under different schedules.
TEST_CASE("property: grid invariants and parallel determinism") {
  const auto j = small_config();
  auto cfg = ExperimentConfig::from_json(j);
  const auto d1 = testsupport::scratch_dir("grid_j1"), d4 = testsupport::scratch_dir("grid_j4");
  cfg.output_dir = d1.string();
  cfg.jobs = 1;
  const auto r1 = run_experiment(cfg);
  cfg.output_dir = d4.string();
  cfg.jobs = 4;
  const auto r4 = run_experiment(cfg);

  const auto t1 = read_tree(d1), t4 = read_tree(d4);
  CHECK(t1.size() == t4.size());
  for (const auto& [name, content] : t1) {
    CAPTURE(name);
    REQUIRE(t4.count(name));
    CHECK(content == t4.at(name));
  }
  CHECK(t1.count("runs.csv"));
  CHECK(t1.count("table2.md"));
  CHECK(t1.count("manifest.json"));
  CHECK(t1.count("drift.json"));

  std::set<std::tuple<std::string, std::string, std::string, std::string>> cells;
  for (const auto& e : r1.manifest) {
    if (e.feature == "*" || e.mitigation == "ablation" || e.mitigation == "intersection" || e.mitigation == "drift" ||
        e.mitigation == "plots")
      continue;
    CHECK(cells.insert({e.model, e.split, e.feature, e.mitigation}).second);
  }
  CHECK(cells.size() == 2 * 2 * 4 * 5);

  for (const auto& c : r1.cells) {
    if (c.mitigation == kBaseline) continue;
    bool has_base = false;
    for (const auto& b : r1.cells)
      if (b.mitigation == kBaseline && b.model == c.model && b.split == c.split && b.feature == c.feature) {
        has_base = true;
        REQUIRE(c.effect.has_value());
        CHECK(c.effect->effective == effectiveness_mark(b.delta_mae.mean, c.delta_mae.mean).effective);
      }
    CHECK(has_base);
  }
  CHECK(r1.exit_code() == 0);
}

TEST_CASE("a failing cell is reported, the rest complete") {
  auto j = small_config();
  j["sensitive_features"]["race"] = {"race_indian", "socio_0"};
  j["mitigations"] = {"reweight"};
  j["ablation"] = false;
  j.erase("drift");
  auto cfg = ExperimentConfig::from_json(j);
  const auto res = run_experiment(cfg);
  CHECK(res.exit_code() == 1);
  bool failed = false, ok = false;
  for (const auto& e : res.manifest) {
    if (e.feature == "socio_0") {
      CHECK_FALSE(e.completed);
      CHECK_FALSE(e.reason.empty());
      failed = true;
    }
    if (e.feature == "race_indian" && e.completed) ok = true;
  }
  CHECK(failed);
  CHECK(ok);
}
