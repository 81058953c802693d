#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "doctest.h"

#include "fairaudit/error.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/pipeline.hpp"
#include "fairaudit/plots.hpp"
#include "fairaudit/regressors.hpp"
#include "support.hpp"

using namespace fairaudit;

TEST_CASE("trend plot keeps input values and yearly means") {
  const std::vector<TrendPoint> pts{{"A", 2016, 1.0}, {"A", 2017, 3.0}, {"B", 2016, 5.0}, {"B", 2017, 7.0}};
  const auto p = trend_plot(pts, "rate");
  REQUIRE(p.wards.size() == 2);
  CHECK(p.wards[0].points == std::vector<std::pair<int, double>>{{2016, 1.0}, {2017, 3.0}});
  CHECK(p.wards[1].points == std::vector<std::pair<int, double>>{{2016, 5.0}, {2017, 7.0}});
  CHECK(p.mean.points == std::vector<std::pair<int, double>>{{2016, 3.0}, {2017, 5.0}});
  CHECK(p.svg.rfind("<svg", 0) == 0);
  CHECK(p.svg.find("</svg>") != std::string::npos);
  CHECK(trend_plot(pts, "rate").svg == p.svg);
}

TEST_CASE("trend plot of a constant column is flat") {
  const std::vector<TrendPoint> pts{{"A", 2016, 2.0}, {"A", 2017, 2.0}, {"B", 2016, 2.0}, {"B", 2017, 2.0}};
  const auto p = trend_plot(pts, "c");
  for (const auto& s : p.wards)
    for (const auto& [y, v] : s.points) CHECK(v == 2.0);
}

TEST_CASE("trend plot on a joined table needs the column") {
  SynthConfig cfg;
  cfg.wards = 4;
  const auto t = testsupport::synth_table(cfg);
  CHECK(trend_plot(t, "crime_rate").wards.size() == 4);
  CHECK_THROWS_AS(trend_plot(t, "nope"), Error);
}

TEST_CASE("oracle: ols slope and p-value against the closed form") {
  Rng rng(1);
  std::vector<double> x(100), y(100);
  for (int i = 0; i < 100; ++i) {
    x[i] = rng.uniform();
    y[i] = 3 * x[i] + 0.1 * rng.normal();
  }
  const auto r = scatter_regression_plot(x, y);
  CHECK(r.slope >= 2.8);
  CHECK(r.slope <= 3.2);

  // Closed form, p from the regularised incomplete beta:
  // P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2).
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 100, my = std::accumulate(y.begin(), y.end(), 0.0) / 100;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < 100; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxy / sxx, a = my - b * mx;
  double sse = 0;
  for (int i = 0; i < 100; ++i) sse += std::pow(y[i] - a - b * x[i], 2);
  const double se = std::sqrt(sse / 98 / sxx), t = b / se;
  CHECK(r.slope == doctest::Approx(b).epsilon(1e-12));
  CHECK(r.intercept == doctest::Approx(a).epsilon(1e-12));
  CHECK(r.slope_stderr == doctest::Approx(se).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(boost::math::ibeta(49.0, 0.5, 98.0 / (98.0 + t * t))).epsilon(1e-9));

  // A weaker relation where p is not tiny.
  for (int i = 0; i < 100; ++i) y[i] = 0.05 * x[i] + rng.normal();
  const auto w = scatter_regression_plot(x, y);
  const double tw = w.t_statistic;
  CHECK(w.p_value == doctest::Approx(boost::math::ibeta(49.0, 0.5, 98.0 / (98.0 + tw * tw))).epsilon(1e-9));
}

TEST_CASE("exact line has a zero-width band") {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
  const auto r = scatter_regression_plot(x, y);
  CHECK(r.p_value < 1e-12);
  for (std::size_t k = 0; k < r.band_x.size(); ++k) CHECK(r.band_high[k] - r.band_low[k] == doctest::Approx(0.0).scale(1.0));
  CHECK(r.band_x.size() == 51);
}

TEST_CASE("independent x and y are rarely significant") {
  Rng rng(2);
  std::vector<double> x(200), y(200);
  for (auto& v : x) v = rng.uniform();
  for (auto& v : y) v = rng.normal();
  int sig = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<std::size_t> perm(200);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<double> yp(200);
    for (int i = 0; i < 200; ++i) yp[i] = y[perm[i]];
    sig += scatter_regression_plot(x, yp).p_value < 0.05;
  }
  CHECK(sig <= 10);
}

TEST_CASE("constant x is rejected") {
  const std::vector<double> x{1, 1, 1}, y{1, 2, 3};
  try {
    scatter_regression_plot(x, y);
    FAIL("expected DegenerateRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_range);
  }
}

TEST_CASE("synthetic fixture shape and determinism") {
  SynthConfig cfg;
  cfg.wards = 5;
  cfg.seed = 3;
  const auto a = generate_fixture(cfg), b = generate_fixture(cfg);
  REQUIRE(a.tables.size() == 3);
  CHECK(a.tables[0].rows.size() == 5 * 7);
  const auto ja = join_and_clean(a.tables, a.schema), jb = join_and_clean(b.tables, b.schema);
  CHECK(encode_all(ja).fingerprint() == encode_all(jb).fingerprint());
  CHECK(a.schema.sensitive(SensitiveClass::race).size() == 6);
  CHECK(a.schema.sensitive(SensitiveClass::religion).size() == 6);

  const auto dir = testsupport::scratch_dir("synth");
  const auto paths = write_fixture(a, dir.string());
  CHECK(paths.size() == 3);
  const auto schema = FeatureSchema::load((dir / "schema.json").string());
  CHECK(ingest(schema, paths).rows.size() == ja.rows.size());
}

// Signed mae_high - mae_low averaged over features, one value per seed; the
// seed average must sit within two Monte Carlo standard errors of zero.
TEST_CASE("null planting gives disparities near zero") {
  std::vector<double> per_seed;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthConfig cfg;
    cfg.seed = 100 + seed;
    const auto t = testsupport::synth_table(cfg);
    const auto p = prepare_split(t, SplitSpec{RandomSplit{0.3, seed}});
    const auto m = train(ModelSpec{ModelKind::linear, {}, 0}, p.train);
    const auto rep = single_feature_audit(m, p.test, p.test.sensitive_names);
    double s = 0;
    for (const auto& r : rep.records) s += r.mae_high - r.mae_low;
    per_seed.push_back(s / static_cast<double>(rep.records.size()));
  }
  const double n = static_cast<double>(per_seed.size());
  const double mean = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / n;
  double var = 0;
  for (double v : per_seed) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (n - 1) / n);
  CHECK(std::abs(mean) <= 2 * se);
}

TEST_CASE("planted group noise raises the high-group error") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.noisy_feature = "race_indian";
    cfg.group_noise = 4.0;
    const auto t = testsupport::synth_table(cfg);
    const auto p = prepare_split(t, SplitSpec{RandomSplit{0.3, seed}});
    const auto m = train(ModelSpec{ModelKind::linear, {}, 0}, p.train);
    const std::vector<std::string> f{"race_indian"};
    const auto rep = single_feature_audit(m, p.test, f);
    REQUIRE(rep.records.size() == 1);
    wins += rep.records[0].mae_high > rep.records[0].mae_low;
  }
  CHECK(wins >= 9);
}
