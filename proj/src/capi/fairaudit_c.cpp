#include "fairaudit/fairaudit.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairaudit/drift.hpp"
#include "fairaudit/error.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/harness.hpp"
#include "fairaudit/intersectional.hpp"
#include "fairaudit/mitigation.hpp"
#include "fairaudit/pipeline.hpp"
#include "fairaudit/regressors.hpp"
#include "fairaudit/synth.hpp"

using namespace fairaudit;
using json = nlohmann::json;

struct fa_dataset {
  std::shared_ptr<const JoinedTable> table;  // null for mitigated sets
  EncodedDataset data;
  std::optional<WeightVector> weights;
  std::optional<AugmentedTrainSet> augmented;
};

struct fa_model {
  TrainedModel model;
};

namespace {

thread_local std::string last_error;

template <class F>
fa_status guard(F&& body) {
  try {
    last_error.clear();
    body();
    return FA_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<fa_status>(static_cast<int>(e.code()));
  } catch (const json::exception& e) {
    last_error = std::string("InvalidConfig: ") + e.what();
    return FA_ERR_INVALID_CONFIG;
  } catch (const std::bad_alloc&) {
    last_error = "Internal: out of memory";
    return FA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = std::string("Internal: ") + e.what();
    return FA_ERR_INTERNAL;
  } catch (...) {
    last_error = "Internal: unknown exception";
    return FA_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) fail(ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

json parse_json(const char* text, const char* what) {
  require(text, what);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_config, std::string(what) + ": " + e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** json_out, const json& j) {
  require(json_out, "json_out");
  *json_out = dup_string(j.dump(2));
}

std::vector<std::string> string_list(const char* const* items, std::size_t n, const char* what) {
  std::vector<std::string> out;
  if (n > 0) require(items, what);
  for (std::size_t i = 0; i < n; ++i) {
    require(items[i], what);
    out.emplace_back(items[i]);
  }
  return out;
}

std::vector<std::string> sensitive_of(const EncodedDataset& d, SensitiveClass cls) {
  std::vector<std::string> out;
  for (const auto& name : d.sensitive_names)
    if (auto it = d.sensitive_classes.find(name); it != d.sensitive_classes.end() && it->second == cls) out.push_back(name);
  return out;
}

std::ofstream open_out(const char* path) {
  require(path, "path");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, std::string("cannot write '") + path + "'");
  return f;
}

}  // namespace

extern "C" {

const char* fa_version(void) { return "1.0.0"; }

const char* fa_status_name(fa_status status) {
  if (status == FA_OK) return "Ok";
  if (status == FA_PARTIAL_FAILURE) return "PartialFailure";
  const int code = static_cast<int>(status);
  if (code >= static_cast<int>(ErrorCode::invalid_argument) && code <= static_cast<int>(ErrorCode::internal))
    return error_code_name(static_cast<ErrorCode>(code)).data();
  return "Unknown";
}

const char* fa_last_error(void) { return last_error.c_str(); }

void fa_string_free(char* s) { std::free(s); }

fa_status fa_dataset_load(const char* schema_path, const char* const* data_paths, size_t n_paths, fa_dataset** out) {
  return guard([&] {
    require(schema_path, "schema_path");
    require(out, "out");
    const auto paths = string_list(data_paths, n_paths, "data_paths");
    if (paths.empty()) fail(ErrorCode::invalid_argument, "no data paths given");
    auto table = std::make_shared<JoinedTable>(ingest(FeatureSchema::load(schema_path), paths));
    auto ds = std::make_unique<fa_dataset>();
    ds->data = encode_all(*table);
    ds->table = std::move(table);
    *out = ds.release();
  });
}

fa_status fa_dataset_split(const fa_dataset* data, const char* split_json, fa_dataset** train, fa_dataset** test) {
  return guard([&] {
    require(data, "data");
    require(train, "train");
    require(test, "test");
    if (!data->table) fail(ErrorCode::invalid_request, "mitigated training sets cannot be split again");
    const auto spec = SplitSpec::from_json(parse_json(split_json, "split_json"));
    auto prepared = prepare_split(*data->table, spec);
    auto a = std::make_unique<fa_dataset>();
    auto b = std::make_unique<fa_dataset>();
    a->table = b->table = data->table;
    a->data = std::move(prepared.train);
    b->data = std::move(prepared.test);
    *train = a.release();
    *test = b.release();
  });
}

fa_status fa_dataset_num_samples(const fa_dataset* data, size_t* out) {
  return guard([&] {
    require(data, "data");
    require(out, "out");
    *out = data->data.size();
  });
}

fa_status fa_dataset_num_features(const fa_dataset* data, size_t* out) {
  return guard([&] {
    require(data, "data");
    require(out, "out");
    *out = data->data.num_features();
  });
}

fa_status fa_dataset_info(const fa_dataset* data, char** json_out) {
  return guard([&] {
    require(data, "data");
    const auto& d = data->data;
    std::vector<int> years;
    for (const auto& s : d.samples)
      if (std::find(years.begin(), years.end(), s.year) == years.end()) years.push_back(s.year);
    std::sort(years.begin(), years.end());
    json j = {{"samples", d.size()},
              {"features", d.feature_names()},
              {"race", sensitive_of(d, SensitiveClass::race)},
              {"religion", sensitive_of(d, SensitiveClass::religion)},
              {"thresholds", d.thresholds},
              {"years", years},
              {"fingerprint", d.fingerprint()},
              {"weighted", data->weights.has_value()}};
    if (data->table) {
      const auto& st = data->table->stats;
      j["join"] = {{"joined", st.joined},
                   {"dropped_missing_target", st.dropped_missing_target},
                   {"dropped_sparse", st.dropped_sparse},
                   {"imputed_cells", st.imputed_cells}};
    }
    if (data->augmented) {
      std::map<std::string, std::size_t> origins;
      for (auto o : data->augmented->origin) ++origins[std::string(to_string(o))];
      j["origins"] = origins;
    }
    emit(json_out, j);
  });
}

fa_status fa_dataset_write_csv(const fa_dataset* data, const char* path) {
  return guard([&] {
    require(data, "data");
    auto f = open_out(path);
    if (data->augmented) data->augmented->write_csv(f);
    else write_encoded_csv(data->data, f);
    if (!f) fail(ErrorCode::io, std::string("write failed for '") + path + "'");
  });
}

void fa_dataset_free(fa_dataset* data) { delete data; }

fa_status fa_model_train(const fa_dataset* train_set, const char* model_json, fa_model** out) {
  return guard([&] {
    require(train_set, "train");
    require(out, "out");
    const auto spec = ModelSpec::from_json(parse_json(model_json, "model_json"));
    std::optional<std::span<const double>> w;
    if (train_set->weights) w = std::span<const double>(*train_set->weights);
    *out = new fa_model{train(spec, train_set->data, w)};
  });
}

fa_status fa_model_predict(const fa_model* model, const fa_dataset* data, double* out, size_t n) {
  return guard([&] {
    require(model, "model");
    require(data, "data");
    if (data->data.size() > 0) require(out, "out");
    if (n < data->data.size()) fail(ErrorCode::length_mismatch, "output buffer is smaller than the dataset");
    const auto yhat = model->model.predict(data->data);
    std::copy(yhat.begin(), yhat.end(), out);
  });
}

fa_status fa_model_evaluate(const fa_model* model, const fa_dataset* data, char** json_out) {
  return guard([&] {
    require(model, "model");
    require(data, "data");
    const auto y = data->data.target_vector();
    const auto yhat = model->model.predict(data->data);
    emit(json_out, {{"n", y.size()}, {"mae", mae(y, yhat)}, {"r2", r2(y, yhat)}, {"model", model->model.spec().to_json()},
                    {"fingerprint", model->model.fingerprint()}});
  });
}

fa_status fa_model_save(const fa_model* model, const char* path) {
  return guard([&] {
    require(model, "model");
    require(path, "path");
    model->model.save(path);
  });
}

fa_status fa_model_load(const char* path, fa_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new fa_model{TrainedModel::load(path)};
  });
}

void fa_model_free(fa_model* model) { delete model; }

fa_status fa_audit(const fa_model* model, const fa_dataset* test, const char* const* features, size_t n_features,
                   char** json_out) {
  return guard([&] {
    require(model, "model");
    require(test, "test");
    auto names = string_list(features, n_features, "features");
    if (names.empty()) names = test->data.sensitive_names;
    emit(json_out, single_feature_audit(model->model, test->data, names).to_json());
  });
}

fa_status fa_audit_ablation(const char* model_json, const fa_dataset* train_set, const fa_dataset* test,
                            const char* const* features, size_t n_features, char** json_out) {
  return guard([&] {
    require(train_set, "train");
    require(test, "test");
    const auto spec = ModelSpec::from_json(parse_json(model_json, "model_json"));
    auto names = string_list(features, n_features, "features");
    if (names.empty()) names = test->data.sensitive_names;
    const auto rep = ablation_audit(spec, train_set->data, test->data, names);
    json recs = json::array();
    for (const auto& r : rep.records)
      recs.push_back({{"feature", r.feature}, {"delta_with", r.delta_with}, {"delta_without", r.delta_without},
                      {"abs_diff", r.abs_diff}});
    json skipped = json::array();
    for (const auto& s : rep.skipped) skipped.push_back({{"feature", s.feature}, {"reason", s.reason}});
    emit(json_out, {{"records", recs}, {"skipped", skipped}});
  });
}

fa_status fa_mitigate(const fa_dataset* train_set, const char* spec_json, fa_dataset** out) {
  return guard([&] {
    require(train_set, "train");
    require(out, "out");
    if (train_set->augmented) fail(ErrorCode::invalid_request, "dataset is already mitigated");
    const auto spec = MitigationSpec::from_json(parse_json(spec_json, "spec_json"));
    auto aug = apply(spec, train_set->data);
    auto ds = std::make_unique<fa_dataset>();
    ds->data = aug.data;
    ds->weights = aug.weights;
    ds->augmented = std::move(aug);
    *out = ds.release();
  });
}

fa_status fa_intersect(const fa_model* model, const fa_dataset* test, const char* const* race, size_t n_race,
                       const char* const* religion, size_t n_religion, const char* options_json, char** json_out) {
  return guard([&] {
    require(model, "model");
    require(test, "test");
    auto a1 = string_list(race, n_race, "race");
    auto a2 = string_list(religion, n_religion, "religion");
    if (a1.empty()) a1 = sensitive_of(test->data, SensitiveClass::race);
    if (a2.empty()) a2 = sensitive_of(test->data, SensitiveClass::religion);
    if (a1.empty() || a2.empty()) fail(ErrorCode::invalid_request, "intersection needs race and religion features");

    IntersectOptions opts;
    BlindSpotOptions spot;
    if (options_json) {
      const auto o = parse_json(options_json, "options_json");
      const auto w = o.value("weighting", std::string("uniform"));
      if (w == "uniform") opts.weighting = AverageWeighting::uniform;
      else if (w == "sample_count") opts.weighting = AverageWeighting::sample_count;
      else fail(ErrorCode::invalid_config, "weighting must be uniform or sample_count");
      opts.min_subgroup = o.value("min_subgroup", opts.min_subgroup);
      if (o.contains("fair_threshold") && !o.at("fair_threshold").is_null())
        spot.fair_threshold = o.at("fair_threshold").get<double>();
      spot.multiple = o.value("multiple", spot.multiple);
    }

    auto all = a1;
    all.insert(all.end(), a2.begin(), a2.end());
    const auto single = single_feature_audit(model->model, test->data, all);
    const auto inter = intersect_audit(model->model, test->data, a1, a2, opts);
    const auto spots = blind_spot_screen(single, inter, spot);
    json flagged = json::array();
    for (const auto& b : spots)
      flagged.push_back({{"feature", b.feature}, {"single_delta", b.single_delta}, {"intersectional", b.intersectional}});
    std::ostringstream csv_text, md_text;
    write_intersection_csv(inter, csv_text);
    write_intersection_markdown(inter, md_text);
    emit(json_out, {{"intersection", inter.to_json()},
                    {"single", single.to_json()},
                    {"blind_spots", flagged},
                    {"table_csv", csv_text.str()},
                    {"table_markdown", md_text.str()}});
  });
}

fa_status fa_drift(const fa_dataset* data, const int* cohort_a, size_t n_a, const int* cohort_b, size_t n_b,
                   double bandwidth, const char* projection_csv, char** json_out) {
  return guard([&] {
    require(data, "data");
    if (n_a > 0) require(cohort_a, "cohort_a");
    if (n_b > 0) require(cohort_b, "cohort_b");
    KernelSpec kernel;
    if (bandwidth > 0.0) kernel.bandwidth = bandwidth;
    const auto report = drift_report(data->data, std::span<const int>(cohort_a, n_a), std::span<const int>(cohort_b, n_b), kernel);
    auto j = report.to_json();
    if (projection_csv) {
      const auto proj = project_2d(data->data.matrix());
      auto f = open_out(projection_csv);
      write_projection_csv(data->data, proj, f);
      j["projection"] = {{"path", projection_csv}, {"explained_variance", proj.explained_variance},
                         {"method", "PCA (top two components)"}};
    }
    emit(json_out, j);
  });
}

fa_status fa_run_experiment(const char* config_path, const char* output_dir, int jobs, char** json_out) {
  int exit = 0;
  const auto status = guard([&] {
    require(config_path, "config_path");
    auto config = ExperimentConfig::load(config_path);
    if (output_dir) config.output_dir = output_dir;
    if (jobs < 0) fail(ErrorCode::invalid_config, "jobs must be >= 0");
    if (jobs > 0) config.jobs = static_cast<std::size_t>(jobs);
    const auto result = run_experiment(config);
    json failed = json::array();
    for (const auto& e : result.manifest)
      if (!e.completed)
        failed.push_back({{"model", e.model}, {"split", e.split}, {"feature", e.feature}, {"mitigation", e.mitigation},
                          {"reason", e.reason}});
    exit = result.exit_code();
    if (json_out)
      emit(json_out, {{"output_dir", config.output_dir},
                      {"cells", result.manifest.size()},
                      {"runs", result.runs.size()},
                      {"failed", failed},
                      {"artifacts", result.artifacts}});
  });
  if (status == FA_OK && exit != 0) {
    last_error = "PartialFailure: some cells failed, see the manifest";
    return FA_PARTIAL_FAILURE;
  }
  return status;
}

fa_status fa_synth(const char* config_json, const char* directory, char** json_out) {
  return guard([&] {
    require(directory, "directory");
    const auto cfg = config_json ? SynthConfig::from_json(parse_json(config_json, "config_json")) : SynthConfig{};
    const auto data = generate_fixture(cfg);
    const auto paths = write_fixture(data, directory);
    if (json_out) {
      std::size_t rows = data.tables.empty() ? 0 : data.tables.front().rows.size();
      emit(json_out, {{"tables", paths},
                      {"schema", (std::filesystem::path(directory) / "schema.json").string()},
                      {"rows", rows},
                      {"config", cfg.to_json()}});
    }
  });
}

fa_status fa_effectiveness_mark(double baseline_mean, double mitigated_mean, int* effective, double* improvement) {
  return guard([&] {
    require(effective, "effective");
    const auto m = effectiveness_mark(baseline_mean, mitigated_mean);
    *effective = m.effective ? 1 : 0;
    if (improvement) *improvement = m.improvement;
    if (m.zero_baseline) fail(ErrorCode::zero_baseline, "baseline mean is zero; marked not effective");
  });
}

}  // extern "C"
