#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "fairaudit/fairaudit.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json take(char* s) {
  REQUIRE(s != nullptr);
  auto j = json::parse(s);
  fa_string_free(s);
  return j;
}

struct Fixture {
  fs::path dir;
  fa_dataset* all = nullptr;
  fa_dataset* train = nullptr;
  fa_dataset* test = nullptr;

  Fixture() {
    dir = fs::temp_directory_path() / "fairaudit_capi";
    fs::remove_all(dir);
    char* out = nullptr;
    REQUIRE(fa_synth(R"({"wards": 10, "seed": 2})", dir.c_str(), &out) == FA_OK);
    const auto info = take(out);
    std::vector<std::string> paths = info["tables"];
    std::vector<const char*> c;
    for (auto& p : paths) c.push_back(p.c_str());
    const auto schema = (dir / "schema.json").string();
    REQUIRE(fa_dataset_load(schema.c_str(), c.data(), c.size(), &all) == FA_OK);
    REQUIRE(fa_dataset_split(all, R"({"mode":"random","test_fraction":0.3,"seed":4})", &train, &test) == FA_OK);
  }
  ~Fixture() {
    fa_dataset_free(test);
    fa_dataset_free(train);
    fa_dataset_free(all);
  }
};

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(fa_status_name(FA_OK)) == "Ok");
  CHECK(std::string(fa_status_name(FA_ERR_EMPTY_GROUP)) == "EmptyGroup");
  CHECK(std::string(fa_status_name(FA_PARTIAL_FAILURE)) == "PartialFailure");
  fa_dataset* d = nullptr;
  const char* missing[] = {"/nonexistent.csv"};
  CHECK(fa_dataset_load("/nonexistent_schema.json", missing, 1, &d) == FA_ERR_IO);
  CHECK(std::string(fa_last_error()).find("Io") == 0);
  CHECK(d == nullptr);
  CHECK(fa_dataset_load(nullptr, missing, 1, &d) == FA_ERR_INVALID_ARGUMENT);
}

TEST_CASE("effectiveness through the C interface") {
  int eff = -1;
  double imp = 0;
  CHECK(fa_effectiveness_mark(14.48, 9.77, &eff, &imp) == FA_OK);
  CHECK(eff == 1);
  CHECK(fa_effectiveness_mark(13.23, 24.39, &eff, nullptr) == FA_OK);
  CHECK(eff == 0);
  CHECK(fa_effectiveness_mark(0.0, 1.0, &eff, nullptr) == FA_ERR_ZERO_BASELINE);
  CHECK(eff == 0);
}

TEST_CASE("dataset, model and analyses") {
  Fixture fx;
  size_t n_all = 0, n_train = 0, n_test = 0;
  fa_dataset_num_samples(fx.all, &n_all);
  fa_dataset_num_samples(fx.train, &n_train);
  fa_dataset_num_samples(fx.test, &n_test);
  CHECK(n_all == 70);
  CHECK(n_train + n_test == n_all);

  char* out = nullptr;
  REQUIRE(fa_dataset_info(fx.all, &out) == FA_OK);
  const auto info = take(out);
  CHECK(info["race"].size() == 6);

  fa_model* model = nullptr;
  REQUIRE(fa_model_train(fx.train, "\"linear\"", &model) == FA_OK);
  std::vector<double> yhat(n_test);
  CHECK(fa_model_predict(model, fx.test, yhat.data(), yhat.size()) == FA_OK);
  CHECK(fa_model_predict(model, fx.test, yhat.data(), 1) == FA_ERR_LENGTH_MISMATCH);

  REQUIRE(fa_model_evaluate(model, fx.test, &out) == FA_OK);
  CHECK(take(out)["n"] == n_test);

  const auto mpath = (fx.dir / "model.json").string();
  CHECK(fa_model_save(model, mpath.c_str()) == FA_OK);
  fa_model* loaded = nullptr;
  REQUIRE(fa_model_load(mpath.c_str(), &loaded) == FA_OK);
  std::vector<double> again(n_test);
  fa_model_predict(loaded, fx.test, again.data(), again.size());
  CHECK(again == yhat);
  fa_model_free(loaded);

  const char* feats[] = {"race_indian"};
  REQUIRE(fa_audit(model, fx.test, feats, 1, &out) == FA_OK);
  CHECK(take(out)["records"].size() == 1);

  REQUIRE(fa_intersect(model, fx.test, nullptr, 0, nullptr, 0, R"({"weighting":"sample_count"})", &out) == FA_OK);
  const auto inter = take(out);
  CHECK(inter.contains("blind_spots"));
  CHECK(inter["intersection"]["cells"].size() == 72);
  CHECK(fa_intersect(model, fx.test, nullptr, 0, nullptr, 0, R"({"weighting":"odd"})", &out) == FA_ERR_INVALID_CONFIG);

  fa_dataset* mitigated = nullptr;
  CHECK(fa_mitigate(fx.train, R"({"method":"reweight"})", &mitigated) == FA_ERR_INVALID_REQUEST);
  REQUIRE(fa_mitigate(fx.train, R"({"method":"oversample","feature":"race_indian","seed":1})", &mitigated) == FA_OK);
  size_t n_mit = 0;
  fa_dataset_num_samples(mitigated, &n_mit);
  CHECK(n_mit >= n_train);
  fa_dataset* twice = nullptr;
  CHECK(fa_mitigate(mitigated, R"({"method":"oversample","feature":"race_indian"})", &twice) == FA_ERR_INVALID_REQUEST);
  const auto csv = (fx.dir / "aug.csv").string();
  CHECK(fa_dataset_write_csv(mitigated, csv.c_str()) == FA_OK);
  fa_model* m2 = nullptr;
  CHECK(fa_model_train(mitigated, R"({"kind":"decision_tree","hyperparams":{"max_depth":3}})", &m2) == FA_OK);
  fa_model_free(m2);
  fa_dataset_free(mitigated);

  const int a[] = {2016}, b[] = {2022};
  const auto proj = (fx.dir / "projection.csv").string();
  REQUIRE(fa_drift(fx.all, a, 1, b, 1, 0.0, proj.c_str(), &out) == FA_OK);
  const auto drift = take(out);
  CHECK(drift["mmd"].get<double>() >= 0.0);
  CHECK(fs::exists(proj));

  fa_model_free(model);
}

TEST_CASE("experiment status codes") {
  const auto dir = fs::temp_directory_path() / "fairaudit_capi_run";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto cfg = (dir / "config.json").string();
  std::ofstream(cfg) << R"({"synthetic":{"wards":6},"models":["linear"],
    "splits":[{"mode":"random","test_fraction":0.3}],
    "sensitive_features":{"race":["race_indian"]},"runs":1})";
  char* out = nullptr;
  CHECK(fa_run_experiment(cfg.c_str(), (dir / "out").c_str(), 2, &out) == FA_OK);
  CHECK(take(out)["failed"].empty());

  std::ofstream(cfg) << R"({"synthetic":{"wards":6},"models":["linear"],
    "splits":[{"mode":"random","test_fraction":0.3}],
    "sensitive_features":{"race":["race_indian","socio_0"]},"runs":1})";
  CHECK(fa_run_experiment(cfg.c_str(), (dir / "out2").c_str(), 1, nullptr) == FA_PARTIAL_FAILURE);

  std::ofstream(cfg) << R"({"models":[]})";
  CHECK(fa_run_experiment(cfg.c_str(), nullptr, 0, nullptr) == FA_ERR_INVALID_CONFIG);
}
