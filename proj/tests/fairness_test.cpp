#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "fairaudit/error.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/pipeline.hpp"
#include "fairaudit/regressors.hpp"
#include "support.hpp"

using namespace fairaudit;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

}  // namespace

TEST_CASE("threshold is the midpoint of the range") {
  CHECK(threshold(std::vector<double>{0, 1}) == 0.5);
  CHECK(threshold(std::vector<double>{0.1, 0.3, 0.9}) == doctest::Approx(0.5));
  CHECK(code_of([] { threshold(std::vector<double>{0.2, 0.2, 0.2}); }) == ErrorCode::degenerate_feature);
}

TEST_CASE("property: threshold sits halfway between min and max") {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(2 + rng.below(50));
    for (auto& x : v) x = rng.uniform() * 3 - 1;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double T = threshold(v);
    CHECK(T - *lo == doctest::Approx(*hi - T));
    std::shuffle(v.begin(), v.end(), std::mt19937(t));
    CHECK(threshold(v) == T);
  }
}

TEST_CASE("group assignment boundary cases") {
  const std::vector<double> v{0.1, 0.9};
  const auto g = assign_groups(v, "f", 0.5);
  CHECK(g.low == std::vector<std::size_t>{0});
  CHECK(g.high == std::vector<std::size_t>{1});
  const std::vector<double> at{0.5, 0.2};
  CHECK(assign_groups(at, "f", 0.5).high == std::vector<std::size_t>{0});
  const std::vector<double> below{0.1, 0.2};
  CHECK(code_of([&] { assign_groups(below, "f", 0.5); }) == ErrorCode::empty_group);
}

TEST_CASE("delta_mae arithmetic") {
  CHECK(make_disparity("f", 2, 5, 1, 1).delta_mae == 3.0);
  const std::vector<double> y{1, 2, 3, 4};
  const auto g = assign_groups(std::vector<double>{0, 0, 1, 1}, "f", 0.5);
  CHECK(delta_mae(y, y, g).delta_mae == 0.0);
}

// Property: swapping the roles of the groups leaves dMAE unchanged, and the
// group MAEs rebuild from per-row residuals.
TEST_CASE("property: delta_mae symmetry and reconstruction") {
  Rng rng(17);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng.below(100);
    std::vector<double> y(n), yhat(n), phi(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.normal() * 10;
      yhat[i] = y[i] + rng.normal() * 3;
      phi[i] = rng.uniform();
    }
    phi[0] = 0.0;
    phi[1] = 1.0;
    const auto g = assign_groups(phi, "f", threshold(phi));
    const auto r = delta_mae(y, yhat, g);
    GroupAssignment swapped = g;
    std::swap(swapped.low, swapped.high);
    const auto s = delta_mae(y, yhat, swapped);
    CHECK(s.delta_mae == doctest::Approx(r.delta_mae));
    CHECK(s.mae_low == r.mae_high);

    double lo = 0, hi = 0;
    for (auto i : g.low) lo += std::abs(y[i] - yhat[i]);
    for (auto i : g.high) hi += std::abs(y[i] - yhat[i]);
    lo /= static_cast<double>(g.low.size());
    hi /= static_cast<double>(g.high.size());
    CHECK(r.mae_low == doctest::Approx(lo));
    CHECK(r.mae_high == doctest::Approx(hi));
    CHECK(r.delta_mae == doctest::Approx(std::abs(hi - lo)));
    CHECK(r.n_low + r.n_high == n);
  }
}

TEST_CASE("audit isolates the one feature with group-dependent error") {
  std::vector<std::vector<double>> X(8, std::vector<double>{0.0});
  std::vector<double> y(8, 10.0), yhat(8, 10.0);
  const std::vector<double> a{0, 0, 0, 0, 1, 1, 1, 1}, b{0, 0, 1, 1, 0, 0, 1, 1};
  for (int i = 4; i < 8; ++i) yhat[i] += (i % 2 ? 2.0 : -2.0);
  const auto d = testsupport::make_dataset(X, y, {{"a", a}, {"b", b}});
  const std::vector<std::string> feats{"a", "b"};
  const auto rep = single_feature_audit(y, yhat, d, feats);
  REQUIRE(rep.records.size() == 2);
  CHECK(rep.find("a")->delta_mae == doctest::Approx(2.0));
  CHECK(rep.find("b")->delta_mae == doctest::Approx(0.0));
  CHECK(single_feature_audit(y, yhat, d, {}).records.empty());
}

TEST_CASE("audit reports degenerate features as skipped") {
  std::vector<std::vector<double>> X(4, std::vector<double>{0.0});
  const std::vector<double> y{1, 2, 3, 4};
  const auto d = testsupport::make_dataset(X, y, {{"flat", {0.3, 0.3, 0.3, 0.3}}, {"ok", {0, 1, 0, 1}}});
  const std::vector<std::string> feats{"flat", "ok"};
  const auto rep = single_feature_audit(y, y, d, feats);
  CHECK(rep.records.size() == 1);
  REQUIRE(rep.skipped.size() == 1);
  CHECK(rep.skipped[0].feature == "flat");
}

TEST_CASE("six race and six religion features give twelve records") {
  SynthConfig cfg;
  cfg.wards = 12;
  const auto table = testsupport::synth_table(cfg);
  const auto p = prepare_split(table, SplitSpec{RandomSplit{0.3, 1}});
  const auto m = train(ModelSpec{ModelKind::linear, {}, 0}, p.train);
  const auto rep = single_feature_audit(m, p.test, p.test.sensitive_names);
  CHECK(rep.records.size() + rep.skipped.size() == 12);
  CHECK(rep.provenance.model == m.fingerprint());
  CHECK(rep.provenance.test == p.test.fingerprint());
}

TEST_CASE("ablation on a target unrelated to the inputs") {
  SynthConfig cfg;
  cfg.wards = 20;
  const auto table = testsupport::synth_table(cfg);
  auto p = prepare_split(table, SplitSpec{RandomSplit{0.3, 2}});
  Rng rng(8);
  for (auto* side : {&p.train, &p.test})
    for (auto& s : side->samples) s.y = 50 + rng.normal();
  const ModelSpec spec{ModelKind::linear, {}, 0};
  const auto rep = ablation_audit(spec, p.train, p.test, p.test.sensitive_names);
  for (const auto& r : rep.records) {
    CHECK(r.delta_with < 1.0);
    CHECK(r.delta_without < 1.0);
    CHECK(r.abs_diff == doctest::Approx(std::abs(r.delta_with - r.delta_without)));
  }
  CHECK(code_of([&] { ablation_audit(spec, p.train, p.test, {}); }) == ErrorCode::invalid_request);
}
