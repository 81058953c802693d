// Command-line front end. Talks to the engine only through the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fairaudit/fairaudit.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitInvalid = 2;

struct Failed {
  fa_status status;
};

void check(fa_status s) {
  if (s != FA_OK) throw Failed{s};
}

struct DatasetDeleter {
  void operator()(fa_dataset* d) const { fa_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(fa_model* m) const { fa_model_free(m); }
};
using Dataset = std::unique_ptr<fa_dataset, DatasetDeleter>;
using Model = std::unique_ptr<fa_model, ModelDeleter>;

json take_json(char* s) {
  json j = json::parse(s);
  fa_string_free(s);
  return j;
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// "2016-2021,2023" -> {2016, ..., 2021, 2023}
std::vector<int> parse_years(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(std::stoi(part));
    } else {
      const int a = std::stoi(part.substr(0, dash)), b = std::stoi(part.substr(dash + 1));
      if (b < a) throw CLI::ValidationError("years", "descending range '" + part + "'");
      for (int y = a; y <= b; ++y) out.push_back(y);
    }
  }
  if (out.empty()) throw CLI::ValidationError("years", "no years in '" + text + "'");
  return out;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) out.push_back(part);
  }
  return out;
}

// random | random:0.3 | temporal:2016-2021:2022 | inline JSON | JSON file
json parse_split(const std::string& text, std::uint64_t seed) {
  json j;
  if (!text.empty() && text.front() == '{') {
    j = json::parse(text);
  } else if (fs::exists(text)) {
    j = json::parse(read_text(text));
  } else if (text.rfind("random", 0) == 0) {
    j = {{"mode", "random"}, {"test_fraction", text.size() > 7 ? std::stod(text.substr(7)) : 0.2}};
  } else if (text.rfind("temporal:", 0) == 0) {
    const auto rest = text.substr(9);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--split", "use temporal:TRAIN_YEARS:TEST_YEARS");
    j = {{"mode", "temporal"}, {"train_years", parse_years(rest.substr(0, colon))},
         {"test_years", parse_years(rest.substr(colon + 1))}};
  } else {
    throw CLI::ValidationError("--split", "unrecognised split '" + text + "'");
  }
  if (j.value("mode", "") == "random" && !j.contains("seed")) j["seed"] = seed;
  return j;
}

json parse_model(const std::string& text, const std::vector<std::string>& hyper, std::uint64_t seed) {
  json j;
  if (!text.empty() && text.front() == '{') j = json::parse(text);
  else if (fs::exists(text) && fs::is_regular_file(text)) j = json::parse(read_text(text));
  else j = {{"kind", text}};
  for (const auto& h : hyper) {
    const auto eq = h.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--hyper", "expected key=value, got '" + h + "'");
    j["hyperparams"][h.substr(0, eq)] = std::stod(h.substr(eq + 1));
  }
  if (!j.contains("seed")) j["seed"] = seed;
  return j;
}

std::string default_out_dir() {
  if (const char* env = std::getenv("FAIRAUDIT_OUT_DIR"); env && *env) return env;
  return "fairaudit_out";
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

struct Common {
  std::string schema;
  std::vector<std::string> data;
  std::string out = default_out_dir();
  std::string split = "random";
  std::uint64_t seed = 0;
  std::string model = "random_forest";
  std::string model_file;
  std::vector<std::string> hyper;
};

Dataset load(const Common& c) {
  if (c.schema.empty()) throw CLI::ValidationError("--schema", "required");
  const auto paths = split_list(c.data);
  if (paths.empty()) throw CLI::ValidationError("--data", "at least one CSV is required");
  const auto ptrs = c_strings(paths);
  fa_dataset* d = nullptr;
  check(fa_dataset_load(c.schema.c_str(), ptrs.data(), ptrs.size(), &d));
  return Dataset(d);
}

std::pair<Dataset, Dataset> load_split(const Common& c) {
  const auto all = load(c);
  const auto spec = parse_split(c.split, c.seed).dump();
  fa_dataset *train = nullptr, *test = nullptr;
  check(fa_dataset_split(all.get(), spec.c_str(), &train, &test));
  return {Dataset(train), Dataset(test)};
}

Model obtain_model(const Common& c, const fa_dataset* train) {
  fa_model* m = nullptr;
  if (!c.model_file.empty()) {
    check(fa_model_load(c.model_file.c_str(), &m));
  } else {
    const auto spec = parse_model(c.model, c.hyper, c.seed).dump();
    check(fa_model_train(train, spec.c_str(), &m));
  }
  return Model(m);
}

void add_data_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--schema", c.schema, "Schema JSON describing the columns");
  cmd->add_option("--data", c.data, "Topic CSV files (repeatable or comma separated)");
  cmd->add_option("--out", c.out, "Output directory (default $FAIRAUDIT_OUT_DIR or ./fairaudit_out)");
}

void add_model_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--split", c.split, "random[:FRACTION] | temporal:TRAIN:TEST | JSON | JSON file");
  cmd->add_option("--seed", c.seed, "Seed for the model and the random split");
  cmd->add_option("--model", c.model, "Model kind (linear, decision_tree, random_forest, gradient_boosting, mlp) or JSON");
  cmd->add_option("--hyper", c.hyper, "Hyperparameter override key=value (repeatable)");
  cmd->add_option("--model-file", c.model_file, "Use a saved model instead of training one");
}

void print_audit(const json& audit) {
  std::printf("%-24s %6s %6s %10s %10s %10s\n", "feature", "n_low", "n_high", "mae_low", "mae_high", "delta_mae");
  for (const auto& r : audit.at("records"))
    std::printf("%-24s %6zu %6zu %10.4f %10.4f %10.4f\n", r.at("feature").get<std::string>().c_str(),
                r.at("n_low").get<std::size_t>(), r.at("n_high").get<std::size_t>(), r.at("mae_low").get<double>(),
                r.at("mae_high").get<double>(), r.at("delta_mae").get<double>());
  for (const auto& s : audit.at("skipped"))
    std::printf("skipped %s: %s\n", s.at("feature").get<std::string>().c_str(), s.at("reason").get<std::string>().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness audit and bias mitigation for ward-level crime-rate regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fa_version()));

  Common c;
  int exit_code = kExitOk;
  std::function<void()> action;

  auto* ingest = app.add_subcommand("ingest", "Load, join and encode the topic tables");
  add_data_options(ingest, c);
  ingest->callback([&] {
    action = [&] {
      const auto d = load(c);
      char* info = nullptr;
      check(fa_dataset_info(d.get(), &info));
      const auto j = take_json(info);
      fs::create_directories(c.out);
      check(fa_dataset_write_csv(d.get(), (fs::path(c.out) / "encoded.csv").string().c_str()));
      write_text(fs::path(c.out) / "dataset.json", j.dump(2) + "\n");
      std::printf("%zu samples, %zu features -> %s\n", j.at("samples").get<std::size_t>(), j.at("features").size(),
                  (fs::path(c.out) / "encoded.csv").string().c_str());
    };
  });

  auto* train_cmd = app.add_subcommand("train", "Train a regressor on one split and report test metrics");
  add_data_options(train_cmd, c);
  add_model_options(train_cmd, c);
  train_cmd->callback([&] {
    action = [&] {
      const auto [train, test] = load_split(c);
      const auto model = obtain_model(c, train.get());
      char* metrics = nullptr;
      check(fa_model_evaluate(model.get(), test.get(), &metrics));
      const auto j = take_json(metrics);
      fs::create_directories(c.out);
      check(fa_model_save(model.get(), (fs::path(c.out) / "model.json").string().c_str()));
      write_text(fs::path(c.out) / "metrics.json", j.dump(2) + "\n");
      std::printf("test n=%zu  MAE=%.4f  R2=%.4f\n", j.at("n").get<std::size_t>(), j.at("mae").get<double>(),
                  j.at("r2").get<double>());
    };
  });

  std::vector<std::string> features;
  auto* audit = app.add_subcommand("audit", "Single-feature dMAE audit");
  add_data_options(audit, c);
  add_model_options(audit, c);
  audit->add_option("--features", features, "Sensitive features (default: all)");
  bool ablation = false;
  audit->add_flag("--ablation", ablation, "Also retrain without the sensitive inputs");
  audit->callback([&] {
    action = [&] {
      const auto [train, test] = load_split(c);
      const auto model = obtain_model(c, train.get());
      const auto names = split_list(features);
      const auto ptrs = c_strings(names);
      char* out = nullptr;
      check(fa_audit(model.get(), test.get(), ptrs.data(), ptrs.size(), &out));
      json j = take_json(out);
      print_audit(j);
      if (ablation) {
        const auto spec = parse_model(c.model, c.hyper, c.seed).dump();
        check(fa_audit_ablation(spec.c_str(), train.get(), test.get(), ptrs.data(), ptrs.size(), &out));
        j = {{"audit", j}, {"ablation", take_json(out)}};
        std::printf("\n%-24s %12s %12s %10s\n", "feature", "with", "without", "|diff|");
        for (const auto& r : j.at("ablation").at("records"))
          std::printf("%-24s %12.4f %12.4f %10.4f\n", r.at("feature").get<std::string>().c_str(),
                      r.at("delta_with").get<double>(), r.at("delta_without").get<double>(), r.at("abs_diff").get<double>());
      }
      write_text(fs::path(c.out) / "audit.json", j.dump(2) + "\n");
    };
  });

  std::string method = "oversample", feature;
  double alpha = 0.2, sigma = 0.01;
  bool compare = false;
  auto* mitigate = app.add_subcommand("mitigate", "Apply one mitigation to the training split");
  add_data_options(mitigate, c);
  add_model_options(mitigate, c);
  mitigate->add_option("--method", method, "oversample | mixup | perturb | reweight");
  mitigate->add_option("--alpha", alpha, "MixUp Beta(alpha, alpha) parameter");
  mitigate->add_option("--sigma", sigma, "Perturbation noise stddev in scaled units");
  mitigate->add_option("--feature", feature, "Sensitive feature that defines the groups")->required();
  mitigate->add_flag("--compare", compare, "Train baseline and mitigated models and compare dMAE");
  mitigate->callback([&] {
    action = [&] {
      const auto [train, test] = load_split(c);
      const json spec = {{"method", method}, {"feature", feature}, {"alpha", alpha}, {"sigma", sigma}, {"seed", c.seed}};
      fa_dataset* aug_raw = nullptr;
      check(fa_mitigate(train.get(), spec.dump().c_str(), &aug_raw));
      const Dataset aug(aug_raw);
      fs::create_directories(c.out);
      check(fa_dataset_write_csv(aug.get(), (fs::path(c.out) / "augmented.csv").string().c_str()));
      char* info = nullptr;
      check(fa_dataset_info(aug.get(), &info));
      json report = {{"spec", spec}, {"dataset", take_json(info)}};
      std::printf("augmented training set: %zu samples\n", report["dataset"]["samples"].get<std::size_t>());
      if (compare) {
        const auto model_spec = parse_model(c.model, c.hyper, c.seed).dump();
        const char* f = feature.c_str();
        fa_model *base = nullptr, *mit = nullptr;
        check(fa_model_train(train.get(), model_spec.c_str(), &base));
        const Model base_m(base);
        check(fa_model_train(aug.get(), model_spec.c_str(), &mit));
        const Model mit_m(mit);
        char *a = nullptr, *b = nullptr;
        check(fa_audit(base_m.get(), test.get(), &f, 1, &a));
        check(fa_audit(mit_m.get(), test.get(), &f, 1, &b));
        report["baseline"] = take_json(a);
        report["mitigated"] = take_json(b);
        const auto& ra = report["baseline"]["records"];
        const auto& rb = report["mitigated"]["records"];
        if (!ra.empty() && !rb.empty()) {
          const double d0 = ra[0]["delta_mae"].get<double>(), d1 = rb[0]["delta_mae"].get<double>();
          int effective = 0;
          double improvement = 0.0;
          const auto st = fa_effectiveness_mark(d0, d1, &effective, &improvement);
          if (st != FA_OK && st != FA_ERR_ZERO_BASELINE) check(st);
          report["effective"] = effective == 1;
          report["improvement"] = improvement;
          std::printf("dMAE %s: baseline %.4f -> %s %.4f (%+.1f%%)%s\n", feature.c_str(), d0, method.c_str(), d1,
                      -100.0 * improvement, effective ? "  effective" : "");
        }
      }
      write_text(fs::path(c.out) / "mitigate.json", report.dump(2) + "\n");
    };
  });

  std::vector<std::string> race, religion;
  std::string weighting = "uniform";
  std::size_t min_subgroup = 3;
  auto* intersect = app.add_subcommand("intersect", "Two-way race x religion audit and blind-spot screen");
  add_data_options(intersect, c);
  add_model_options(intersect, c);
  intersect->add_option("--race", race, "Race features (default: all race columns)");
  intersect->add_option("--religion", religion, "Religion features (default: all religion columns)");
  intersect->add_option("--weighting", weighting, "Average weighting: uniform | sample_count");
  intersect->add_option("--min-subgroup", min_subgroup, "Smallest subgroup a cell may use");
  intersect->callback([&] {
    action = [&] {
      const auto [train, test] = load_split(c);
      const auto model = obtain_model(c, train.get());
      const auto a1 = split_list(race), a2 = split_list(religion);
      const auto p1 = c_strings(a1), p2 = c_strings(a2);
      const json opts = {{"weighting", weighting}, {"min_subgroup", min_subgroup}};
      char* out = nullptr;
      check(fa_intersect(model.get(), test.get(), p1.data(), p1.size(), p2.data(), p2.size(), opts.dump().c_str(), &out));
      const auto j = take_json(out);
      write_text(fs::path(c.out) / "table4.csv", j.at("table_csv").get<std::string>());
      write_text(fs::path(c.out) / "table4.md", j.at("table_markdown").get<std::string>());
      write_text(fs::path(c.out) / "intersect.json", j.dump(2) + "\n");
      std::fputs(j.at("table_markdown").get<std::string>().c_str(), stdout);
      for (const auto& b : j.at("blind_spots"))
        std::printf("blind spot: %s (single %.4f, intersectional %.4f)\n", b.at("feature").get<std::string>().c_str(),
                    b.at("single_delta").get<double>(), b.at("intersectional").get<double>());
    };
  });

  std::string cohort_a = "2016", cohort_b = "2022";
  double bandwidth = 0.0;
  auto* drift = app.add_subcommand("drift", "MMD and per-feature KS shift between year cohorts");
  add_data_options(drift, c);
  drift->add_option("--cohort-a", cohort_a, "Years of the first cohort, e.g. 2016 or 2016-2018");
  drift->add_option("--cohort-b", cohort_b, "Years of the second cohort");
  drift->add_option("--bandwidth", bandwidth, "RBF bandwidth (default: median heuristic)");
  drift->callback([&] {
    action = [&] {
      const auto d = load(c);
      const auto ya = parse_years(cohort_a), yb = parse_years(cohort_b);
      fs::create_directories(c.out);
      const auto proj = (fs::path(c.out) / "projection.csv").string();
      char* out = nullptr;
      check(fa_drift(d.get(), ya.data(), ya.size(), yb.data(), yb.size(), bandwidth, proj.c_str(), &out));
      const auto j = take_json(out);
      write_text(fs::path(c.out) / "drift.json", j.dump(2) + "\n");
      std::printf("MMD = %.4f (%s); %.2f%% of %s shifted at p < 0.05\n", j.at("mmd").get<double>(),
                  j.at("kernel").get<std::string>().c_str(), 100.0 * j.at("fraction_significant").get<double>(),
                  j.at("columns_tested").get<std::string>().c_str());
    };
  });

  std::string config;
  int jobs = 0;
  bool out_given = false;
  auto* run = app.add_subcommand("run", "Run a full experiment grid from a JSON config");
  run->add_option("--config", config, "Experiment config JSON")->required();
  auto* run_out = run->add_option("--out", c.out, "Output directory (overrides the config)");
  run->add_option("--jobs", jobs, "Worker threads (default: config value)");
  run->callback([&] {
    out_given = run_out->count() > 0;
    action = [&] {
      // Config output_dir wins over the environment default, --out wins over both.
      std::string out_dir;
      if (out_given) {
        out_dir = c.out;
      } else {
        const auto j = json::parse(read_text(config));
        out_dir = j.value("output_dir", std::string());
        if (out_dir.empty()) out_dir = default_out_dir();
      }
      char* out = nullptr;
      const auto st = fa_run_experiment(config.c_str(), out_dir.c_str(), jobs, &out);
      if (st != FA_OK && st != FA_PARTIAL_FAILURE) check(st);
      const auto j = take_json(out);
      std::printf("%zu cells, %zu runs -> %s\n", j.at("cells").get<std::size_t>(), j.at("runs").get<std::size_t>(),
                  j.at("output_dir").get<std::string>().c_str());
      for (const auto& f : j.at("failed"))
        std::fprintf(stderr, "failed: %s/%s/%s/%s: %s\n", f.at("model").get<std::string>().c_str(),
                     f.at("split").get<std::string>().c_str(), f.at("feature").get<std::string>().c_str(),
                     f.at("mitigation").get<std::string>().c_str(), f.at("reason").get<std::string>().c_str());
      if (st == FA_PARTIAL_FAILURE) exit_code = kExitPartial;
    };
  });

  std::size_t wards = 34;
  std::string years = "2016-2022", synth_config;
  auto* synth = app.add_subcommand("synth", "Write a synthetic ward-year fixture");
  synth->add_option("--wards", wards, "Number of wards");
  synth->add_option("--years", years, "Year range FROM-TO");
  synth->add_option("--seed", c.seed, "Generator seed");
  synth->add_option("--config", synth_config, "JSON file with planted-structure settings");
  synth->add_option("--out", c.out, "Output directory");
  synth->callback([&] {
    action = [&] {
      json cfg = synth_config.empty() ? json::object() : json::parse(read_text(synth_config));
      const auto ys = parse_years(years);
      if (!synth->get_option("--wards")->empty() || !cfg.contains("wards")) cfg["wards"] = wards;
      if (!synth->get_option("--years")->empty() || !cfg.contains("year_from")) {
        cfg["year_from"] = ys.front();
        cfg["year_to"] = ys.back();
      }
      if (!synth->get_option("--seed")->empty() || !cfg.contains("seed")) cfg["seed"] = c.seed;
      char* out = nullptr;
      check(fa_synth(cfg.dump().c_str(), c.out.c_str(), &out));
      const auto j = take_json(out);
      std::printf("%zu ward-years -> %s (schema %s)\n", j.at("rows").get<std::size_t>(), c.out.c_str(),
                  j.at("schema").get<std::string>().c_str());
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (action) action();
  } catch (const Failed& f) {
    std::fprintf(stderr, "error: %s\n", fa_last_error());
    return f.status == FA_PARTIAL_FAILURE ? kExitPartial : kExitInvalid;
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  }
  return exit_code;
}
