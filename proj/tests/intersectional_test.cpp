#include <sstream>

#include "doctest.h"

#include "fairaudit/error.hpp"
#include "fairaudit/intersectional.hpp"
#include "support.hpp"

using namespace fairaudit;

namespace {

struct Factorial {
  EncodedDataset data;
  std::vector<double> y, yhat;
};

// Full 2x2x2 design over r1, r2 (race) and g1 (religion), `reps` rows per
// cell. `err` gives the absolute residual of a row from its three levels.
template <class F>
Factorial factorial(int reps, F err) {
  std::vector<std::vector<double>> X;
  std::vector<double> r1, r2, g1, y, yhat;
  int k = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int r = 0; r < reps; ++r, ++k) {
          X.push_back({0.0});
          r1.push_back(a);
          r2.push_back(b);
          g1.push_back(c);
          y.push_back(10.0);
          const double e = err(a, b, c);
          yhat.push_back(10.0 + (k % 2 ? e : -e));
        }
  Factorial f{testsupport::make_dataset(X, y, {{"r1", r1}, {"r2", r2}, {"g1", g1}}), y, yhat};
  f.data.sensitive_classes["g1"] = SensitiveClass::religion;
  return f;
}

const std::vector<std::string> kRace{"r1", "r2"};
const std::vector<std::string> kReligion{"g1"};
const std::vector<std::string> kAll{"r1", "r2", "g1"};

}  // namespace

TEST_CASE("cell delta arithmetic on reference cell values") {
  CHECK(cell_delta(6.27, 3.15) == doctest::Approx(3.12).epsilon(1e-12));
  CHECK(cell_delta(6.67, 4.01) == doctest::Approx(2.66).epsilon(1e-12));
}

TEST_CASE("perfect predictor gives zero cells and averages") {
  auto f = factorial(3, [](int, int, int) { return 0.0; });
  const auto rep = intersect_audit(f.y, f.y, f.data, kRace, kReligion);
  CHECK(rep.cells.size() == 4);
  for (const auto& c : rep.cells) CHECK(c.delta == 0.0);
  CHECK(*rep.average("r1", Level::high) == 0.0);
  CHECK(*rep.abs_delta_average("r2") == 0.0);
}

TEST_CASE("cells compare A2 groups inside one A1 level") {
  auto f = factorial(3, [](int a, int, int c) { return a == 1 ? (c == 1 ? 4.0 : 0.0) : 2.0; });
  const auto rep = intersect_audit(f.y, f.yhat, f.data, kRace, kReligion);
  const auto* hi = rep.cell("r1", Level::high, "g1");
  REQUIRE(hi);
  CHECK(hi->mae_a2_high == doctest::Approx(4.0));
  CHECK(hi->mae_a2_low == doctest::Approx(0.0));
  CHECK(hi->delta == doctest::Approx(4.0));
  CHECK(rep.cell("r1", Level::low, "g1")->delta == doctest::Approx(0.0));
  CHECK(*rep.abs_delta_average("r1") == doctest::Approx(4.0));
  CHECK(rep.cell("r2", Level::high, "g1")->delta == doctest::Approx(2.0));
  CHECK(*rep.abs_delta_average("r2") == doctest::Approx(0.0));
  // Race-major, High before Low.
  CHECK(rep.cells[0].a1 == "r1");
  CHECK(rep.cells[0].a1_level == Level::high);
  CHECK(rep.cells[1].a1_level == Level::low);
}

TEST_CASE("small subgroups are skipped") {
  auto f = factorial(1, [](int, int, int) { return 1.0; });
  IntersectOptions opts;
  opts.min_subgroup = 3;
  const auto rep = intersect_audit(f.y, f.yhat, f.data, kRace, kReligion, opts);
  for (const auto& c : rep.cells) CHECK(c.skipped);
  CHECK_FALSE(rep.average("r1", Level::high).has_value());
}

TEST_CASE("sample-count weighting equals uniform for equal cells") {
  auto f = factorial(4, [](int a, int b, int c) { return a + 2.0 * b + c; });
  IntersectOptions w;
  w.weighting = AverageWeighting::sample_count;
  const auto u = intersect_audit(f.y, f.yhat, f.data, kRace, kReligion);
  const auto s = intersect_audit(f.y, f.yhat, f.data, kRace, kReligion, w);
  CHECK(*u.average("r1", Level::high) == doctest::Approx(*s.average("r1", Level::high)));
  CHECK(u.cells[0].weight() == 16);
}

TEST_CASE("blind spot screen") {
  SUBCASE("engineered hidden disparity is flagged alone") {
    auto f = factorial(3, [](int a, int, int c) { return a == 1 ? (c == 1 ? 4.0 : 0.0) : 2.0; });
    const auto single = single_feature_audit(f.y, f.yhat, f.data, kAll);
    CHECK(single.find("r1")->delta_mae == doctest::Approx(0.0));
    const auto inter = intersect_audit(f.y, f.yhat, f.data, kRace, kReligion);
    BlindSpotOptions o;
    o.fair_threshold = 0.5;
    const auto spots = blind_spot_screen(single, inter, o);
    REQUIRE(spots.size() == 1);
    CHECK(spots[0].feature == "r1");
    CHECK(spots[0].intersectional == doctest::Approx(4.0));
  }
  SUBCASE("all deltas zero") {
    auto f = factorial(3, [](int, int, int) { return 1.0; });
    const auto single = single_feature_audit(f.y, f.yhat, f.data, kAll);
    const auto inter = intersect_audit(f.y, f.yhat, f.data, kRace, kReligion);
    CHECK(blind_spot_screen(single, inter).empty());
  }
  SUBCASE("plainly unfair feature is not a blind spot") {
    // r1 High has large error everywhere; the intersection is large too.
    auto f = factorial(3, [](int a, int, int c) { return a == 1 ? (c == 1 ? 9.0 : 5.0) : 0.5; });
    const auto single = single_feature_audit(f.y, f.yhat, f.data, kAll);
    const auto inter = intersect_audit(f.y, f.yhat, f.data, kRace, kReligion);
    BlindSpotOptions o;
    o.fair_threshold = 1.0;
    CHECK(single.find("r1")->delta_mae > 1.0);
    CHECK(blind_spot_screen(single, inter, o).empty());
  }
  SUBCASE("reports from different runs are rejected") {
    auto f = factorial(3, [](int, int, int) { return 1.0; });
    auto single = single_feature_audit(f.y, f.yhat, f.data, kAll);
    const auto inter = intersect_audit(f.y, f.yhat, f.data, kRace, kReligion);
    single.provenance.model ^= 1;
    try {
      blind_spot_screen(single, inter);
      FAIL("expected MismatchedProvenance");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::mismatched_provenance);
    }
  }
}

TEST_CASE("table layout") {
  auto f = factorial(3, [](int a, int, int c) { return a == 1 ? (c == 1 ? 4.0 : 0.0) : 2.0; });
  const auto rep = intersect_audit(f.y, f.yhat, f.data, kRace, kReligion);
  std::ostringstream csv, md;
  write_intersection_csv(rep, csv);
  write_intersection_markdown(rep, md);
  CHECK(csv.str().find("g1") != std::string::npos);
  CHECK(md.str().find("abs dAvg") != std::string::npos);
  CHECK(md.str().find("4.00") != std::string::npos);
}
