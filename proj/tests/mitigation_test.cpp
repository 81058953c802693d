#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"

#include "fairaudit/error.hpp"
#include "fairaudit/mitigation.hpp"
#include "fairaudit/pipeline.hpp"
#include "support.hpp"

using namespace fairaudit;

namespace {

// n rows, the first n_high of which sit in the High group of "s". Two
// numeric features plus an "area" one-hot pair.
EncodedDataset grouped(std::size_t n, std::size_t n_high, Rng& rng) {
  std::vector<std::vector<double>> X;
  std::vector<double> y, s;
  for (std::size_t i = 0; i < n; ++i) {
    const double hot = rng.uniform() < 0.5 ? 1.0 : 0.0;
    X.push_back({rng.normal(), rng.normal(), hot, 1.0 - hot});
    y.push_back(20 + 5 * rng.normal());
    s.push_back(i < n_high ? 0.6 + 0.4 * rng.uniform() : 0.4 * rng.uniform());
  }
  s[0] = 1.0;
  s[n - 1] = 0.0;
  auto d = testsupport::make_dataset(X, y, {{"s", s}}, {"a", "b", "area=u", "area=r"});
  d.encoder.features[2] = {"area=u", FeatureType::one_hot, "area", "u"};
  d.encoder.features[3] = {"area=r", FeatureType::one_hot, "area", "r"};
  return d;
}

std::array<std::size_t, 4> histogram(const std::vector<int>& strata, const std::vector<std::size_t>& rows) {
  std::array<std::size_t, 4> h{};
  for (auto i : rows) ++h[static_cast<std::size_t>(strata[i])];
  return h;
}

}  // namespace

TEST_CASE("reweight formula") {
  const auto g = group_weights(20, 80);
  CHECK(g.low == doctest::Approx(2.5));
  CHECK(g.high == doctest::Approx(0.625));
  const auto even = group_weights(50, 50);
  CHECK(even.low == 1.0);
  CHECK(even.high == 1.0);
  CHECK_THROWS_AS(group_weights(10, 0), Error);

  Rng rng(1);
  const auto d = grouped(100, 80, rng);
  const auto w = reweight(d, assign_groups(d, "s"));
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[99] == doctest::Approx(1.0));
}

// Property: n_g * w_g = n / 2 for both groups before normalisation.
TEST_CASE("property: reweight balances group mass") {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t lo = 1 + rng.below(500), hi = 1 + rng.below(500);
    const auto g = group_weights(lo, hi);
    const double half = static_cast<double>(lo + hi) / 2.0;
    CHECK(g.low * static_cast<double>(lo) == doctest::Approx(half));
    CHECK(g.high * static_cast<double>(hi) == doctest::Approx(half));
  }
}

TEST_CASE("oversample balances 30/70 and keeps all originals") {
  Rng rng(3);
  const auto d = grouped(100, 70, rng);
  const auto groups = assign_groups(d, "s");
  REQUIRE(groups.high.size() == 70);
  const auto out = oversample(d, groups, 9);
  CHECK(out.data.size() == 140);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(out.origin[i] == SampleOrigin::original);
    CHECK(out.data.samples[i].x == d.samples[i].x);
  }
  const auto after = assign_groups(out.data, "s");
  CHECK(after.low.size() == 70);
  CHECK(after.high.size() == 70);
  CHECK_FALSE(out.weights.has_value());
}

TEST_CASE("balanced groups pass through unchanged") {
  Rng rng(4);
  const auto d = grouped(100, 50, rng);
  const auto out = oversample(d, assign_groups(d, "s"), 1);
  CHECK(out.data.size() == 100);
  CHECK(out.data.fingerprint() == d.fingerprint());
}

// Property: after any balancing method the groups are equal, originals are
// conserved, and the minority target-quartile histogram stays proportional.
TEST_CASE("property: balancing and conservation") {
  Rng rng(5);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 10 + rng.below(200);
    const std::size_t n_high = 2 + rng.below(n - 4);
    const auto d = grouped(n, n_high, rng);
    const auto groups = assign_groups(d, "s");
    const auto& minority = groups.low.size() < groups.high.size() ? groups.low : groups.high;
    const std::size_t target = std::max(groups.low.size(), groups.high.size());
    const auto strata = target_strata(d.target_vector());
    const auto before = histogram(strata, minority);

    for (int m = 0; m < 3; ++m) {
      const auto out = m == 0 ? oversample(d, groups, rng.next())
                       : m == 1 ? mixup(d, groups, 0.2, rng.next())
                                : perturb(d, groups, 0.01, rng.next());
      CHECK(out.data.size() == n + (target - minority.size()));
      for (std::size_t i = 0; i < n; ++i) CHECK(out.data.samples[i].y == d.samples[i].y);
      std::array<std::size_t, 4> after = before;
      for (std::size_t i = n; i < out.data.size(); ++i) ++after[static_cast<std::size_t>(strata[out.source[i]])];
      for (std::size_t k = 0; k < 4; ++k) {
        const double exact = static_cast<double>(target) * static_cast<double>(before[k]) / static_cast<double>(minority.size());
        CHECK(std::abs(static_cast<double>(after[k]) - exact) <= 1.0);
      }
      if (m != 1) {
        const auto re = assign_groups(out.data, "s", groups.threshold);
        CHECK(re.low.size() == re.high.size());
      }
    }
  }
}

TEST_CASE("mix_samples arithmetic") {
  Sample a{"a", 2016, {0, 2}, 0, {}}, b{"b", 2017, {2, 0}, 10, {}};
  const auto half = mix_samples(a, b, 0.5);
  CHECK(half.x == std::vector<double>{1, 1});
  CHECK(half.y == 5);
  const auto one = mix_samples(a, b, 1.0);
  CHECK(one.x == a.x);
  CHECK(one.y == a.y);
}

// Property: synthetic rows stay inside the box of their parents.
TEST_CASE("property: mixup convexity") {
  Rng rng(6);
  for (int t = 0; t < 2000; ++t) {
    Sample a, b;
    const std::size_t p = 1 + rng.below(8);
    for (std::size_t j = 0; j < p; ++j) {
      a.x.push_back(rng.normal() * 10);
      b.x.push_back(rng.normal() * 10);
    }
    a.y = rng.normal();
    b.y = rng.normal();
    const auto s = mix_samples(a, b, rng.beta(0.2, 0.2));
    for (std::size_t j = 0; j < p; ++j) {
      CHECK(s.x[j] >= std::min(a.x[j], b.x[j]) - 1e-12);
      CHECK(s.x[j] <= std::max(a.x[j], b.x[j]) + 1e-12);
    }
    CHECK(s.y >= std::min(a.y, b.y) - 1e-12);
    CHECK(s.y <= std::max(a.y, b.y) + 1e-12);
  }
}

TEST_CASE("mixup needs two minority rows") {
  Rng rng(7);
  auto d = grouped(10, 9, rng);
  const auto groups = assign_groups(d, "s");
  REQUIRE(groups.low.size() == 1);
  try {
    mixup(d, groups, 0.2, 1);
    FAIL("expected SingletonGroup");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::singleton_group);
  }
}

TEST_CASE("perturbation with zero sigma equals oversampling") {
  Rng rng(8);
  const auto d = grouped(60, 45, rng);
  const auto g = assign_groups(d, "s");
  CHECK(perturb(d, g, 0.0, 4).data.fingerprint() == oversample(d, g, 4).data.fingerprint());
}

TEST_CASE("perturbation noise has the folded-normal deviation") {
  Rng rng(9);
  const auto d = grouped(12000, 11000, rng);
  const auto g = assign_groups(d, "s");
  const auto out = perturb(d, g, 0.01, 21);
  REQUIRE(out.data.size() - d.size() >= 10000);
  double dev = 0;
  std::size_t count = 0;
  for (std::size_t i = d.size(); i < out.data.size(); ++i) {
    const auto& src = d.samples[out.source[i]];
    for (std::size_t j = 0; j < 2; ++j) {
      dev += std::abs(out.data.samples[i].x[j] - src.x[j]);
      ++count;
    }
    CHECK((out.data.samples[i].x[2] == 0.0 || out.data.samples[i].x[2] == 1.0));
    CHECK(out.data.samples[i].x[2] == src.x[2]);
    CHECK(out.data.samples[i].x[3] == src.x[3]);
  }
  const double expected = 0.01 * std::sqrt(2.0 / M_PI);
  CHECK(expected == doctest::Approx(0.00798).epsilon(1e-3));
  CHECK(std::abs(dev / static_cast<double>(count) - expected) <= 0.1 * expected);
}

TEST_CASE("apply dispatches and is deterministic") {
  Rng rng(10);
  const auto d = grouped(80, 60, rng);
  MitigationSpec rw{MitigationMethod::reweight, "s", 0.2, 0.01, 0};
  const auto a = apply(rw, d);
  CHECK(a.data.fingerprint() == d.fingerprint());
  REQUIRE(a.weights.has_value());
  MitigationSpec os{MitigationMethod::oversample, "s", 0.2, 0.01, 3};
  const auto b = apply(os, d), c = apply(os, d);
  CHECK(b.data.size() == 120);
  CHECK_FALSE(b.weights.has_value());
  CHECK(b.data.fingerprint() == c.data.fingerprint());
  CHECK(b.source == c.source);
  MitigationSpec none{MitigationMethod::oversample, "", 0.2, 0.01, 3};
  CHECK_THROWS_AS(apply(none, d), Error);
}

TEST_CASE("augmented csv carries provenance columns") {
  Rng rng(11);
  const auto d = grouped(20, 15, rng);
  const auto out = apply(MitigationSpec{MitigationMethod::mixup, "s", 0.2, 0.01, 1}, d);
  std::ostringstream s;
  out.write_csv(s);
  const auto text = s.str();
  CHECK(text.find("__origin") != std::string::npos);
  CHECK(text.find("synthetic") != std::string::npos);
}
