#include <algorithm>
#include <numeric>
#include <set>

#include "doctest.h"
#include "json.hpp"

#include "fairaudit/dataset.hpp"
#include "fairaudit/error.hpp"
#include "fairaudit/pipeline.hpp"
#include "support.hpp"

using namespace fairaudit;

namespace {

FeatureSchema tiny_schema() {
  return FeatureSchema::from_json(nlohmann::json::parse(R"({
    "columns": [
      {"name": "x", "kind": "numeric"},
      {"name": "area", "kind": "categorical"},
      {"name": "race_a", "kind": "numeric", "sensitive_class": "race"},
      {"name": "crime_rate", "kind": "target"}],
    "target": "crime_rate", "year_range": [2016, 2022]})"));
}

JoinedTable tiny_table() {
  JoinedTable t;
  t.schema = tiny_schema();
  const double xs[] = {2, 4, 6};
  const char* areas[] = {"A", "B", "A"};
  const double race[] = {0.1, 0.5, 0.9};
  for (int i = 0; i < 3; ++i)
    t.rows.push_back({"W" + std::to_string(i), 2016 + i, {xs[i], std::string(areas[i]), race[i], 10.0 * i}});
  return t;
}

}  // namespace

TEST_CASE("z-scores use the population stddev") {
  const auto t = tiny_table();
  const std::vector<std::size_t> all{0, 1, 2};
  const auto d = encode(t, all);
  const auto xi = *d.feature_index("x");
  CHECK(d.samples[0].x[xi] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(d.samples[1].x[xi] == doctest::Approx(0.0));
  CHECK(d.samples[2].x[xi] == doctest::Approx(1.2247).epsilon(1e-4));
}

TEST_CASE("categorical levels become one-hot columns") {
  const auto t = tiny_table();
  const std::vector<std::size_t> all{0, 1, 2};
  const auto d = encode(t, all);
  const auto a = *d.feature_index("area=A"), b = *d.feature_index("area=B");
  const double expect[3][2] = {{1, 0}, {0, 1}, {1, 0}};
  for (int i = 0; i < 3; ++i) {
    CHECK(d.samples[i].x[a] == expect[i][0]);
    CHECK(d.samples[i].x[b] == expect[i][1]);
    CHECK(decode_level(d, i, "area") == (i == 1 ? "B" : "A"));
  }
}

TEST_CASE("rows outside the fit set reuse the stored scaler") {
  const auto t = tiny_table();
  const std::vector<std::size_t> fit{0, 1};
  const auto d = encode(t, fit);
  const auto xi = *d.feature_index("x");
  // mean 3, population stddev 1 over {2, 4}
  CHECK(d.samples[2].x[xi] == doctest::Approx(3.0));
  const auto& sc = d.encoder.scalers.front();
  CHECK(sc.mean == doctest::Approx(3.0));
  CHECK(sc.stddev == doctest::Approx(1.0));
}

TEST_CASE("sensitive metadata keeps raw proportions") {
  const auto t = tiny_table();
  const auto d = encode_all(t);
  REQUIRE(d.sensitive_names == std::vector<std::string>{"race_a"});
  CHECK(d.samples[2].sensitive[0] == doctest::Approx(0.9));
  CHECK(d.thresholds.at("race_a") == doctest::Approx(0.5));
}

TEST_CASE("parse_table loads rows and rejects repeated keys") {
  const auto schema = tiny_schema();
  const auto t = parse_table("t", "ward,year,x,area\nCentral,2018,1,A\nEaston,2018,2,B\nCentral,2019,3,A\nEaston,2019,4,B\n", schema);
  CHECK(t.rows.size() == 4);
  try {
    parse_table("dup", "ward,year,x\nCentral,2018,1\nCentral,2018,2\n", schema);
    FAIL("expected DuplicateKey");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::duplicate_key);
  }
}

TEST_CASE("join keeps shared keys and fails on disjoint ones") {
  const auto schema = tiny_schema();
  std::string a = "ward,year,x,area\n", b = "ward,year,race_a,crime_rate\n";
  for (int i = 0; i < 10; ++i) {
    a += "W" + std::to_string(i) + ",2017," + std::to_string(i) + ",A\n";
    b += "W" + std::to_string(i) + ",2017,0." + std::to_string(i) + "," + std::to_string(i) + "\n";
  }
  const std::vector<RawTable> both{parse_table("a", a, schema), parse_table("b", b, schema)};
  CHECK(join_and_clean(both, schema).rows.size() == 10);

  std::string c = "ward,year,race_a,crime_rate\n";
  for (int i = 0; i < 10; ++i) c += "Z" + std::to_string(i) + ",2017,0.5,3\n";
  const std::vector<RawTable> disjoint{parse_table("a", a, schema), parse_table("c", c, schema)};
  CHECK_THROWS_AS(join_and_clean(disjoint, schema), Error);
  try {
    join_and_clean(disjoint, schema);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_join);
  }
}

TEST_CASE("min_max_scale") {
  const std::vector<double> a{0, 5, 10}, b{0.2, 0.6};
  CHECK(min_max_scale(a) == std::vector<double>{0, 0.5, 1});
  CHECK(min_max_scale(b) == std::vector<double>{0, 1});
  const std::vector<double> flat{3, 3, 3};
  try {
    min_max_scale(flat);
    FAIL("expected DegenerateRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_range);
  }
}

TEST_CASE("random split arithmetic and determinism") {
  const std::vector<int> years(10, 2016);
  SplitSpec spec{RandomSplit{0.2, 7}};
  const auto a = split_indices(years, spec), b = split_indices(years, spec);
  CHECK(a.train.size() == 8);
  CHECK(a.test.size() == 2);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
}

TEST_CASE("temporal split keeps only listed years on each side") {
  const auto t = testsupport::synth_table({});
  std::vector<int> years;
  for (const auto& r : t.rows) years.push_back(r.year);
  SplitSpec spec{TemporalSplit{{2016, 2017, 2018, 2019, 2020, 2021}, {2022}}};
  const auto s = split_indices(years, spec);
  for (auto i : s.test) CHECK(years[i] == 2022);
  for (auto i : s.train) CHECK(years[i] < 2022);
}

// Property: every row lands on exactly one side.
TEST_CASE("property: splits are exhaustive and disjoint") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(300);
    std::vector<int> years(n);
    for (auto& y : years) y = 2016 + static_cast<int>(rng.below(7));
    SplitSpec spec;
    if (trial % 2 == 0) {
      spec.mode = RandomSplit{0.05 + 0.9 * rng.uniform(), rng.next()};
    } else {
      const int cut = 2017 + static_cast<int>(rng.below(5));
      TemporalSplit ts;
      for (int y = 2016; y <= 2022; ++y) (y < cut ? ts.train_years : ts.test_years).push_back(y);
      spec.mode = ts;
    }
    SplitIndices s;
    try {
      s = split_indices(years, spec);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::empty_side);
      continue;
    }
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(n);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
  }
}

TEST_CASE("prepare_split fits the encoder on training rows") {
  SynthConfig cfg;
  cfg.wards = 8;
  const auto t = testsupport::synth_table(cfg);
  SplitSpec spec{TemporalSplit{{2016, 2017, 2018, 2019, 2020, 2021}, {2022}}};
  const auto p = prepare_split(t, spec);
  CHECK(p.train.size() + p.test.size() == t.rows.size());
  const auto col = *p.train.feature_index("socio_1");
  double mean = 0;
  for (const auto& s : p.train.samples) mean += s.x[col];
  CHECK(mean / static_cast<double>(p.train.size()) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(p.train.thresholds == p.test.thresholds);
}

TEST_CASE("schema validation") {
  CHECK_THROWS_AS(FeatureSchema::from_json(nlohmann::json::parse(R"({"columns":[{"name":"x","kind":"numeric"}]})")), Error);
  CHECK_THROWS_AS(FeatureSchema::from_json(nlohmann::json::parse(
                      R"({"columns":[{"name":"r","kind":"categorical","sensitive_class":"race"},{"name":"y","kind":"target"}]})")),
                  Error);
}

TEST_CASE("fingerprint follows content") {
  const auto t = tiny_table();
  const auto a = encode_all(t);
  auto b = a;
  CHECK(a.fingerprint() == b.fingerprint());
  b.samples[0].y += 1.0;
  CHECK(a.fingerprint() != b.fingerprint());
}
