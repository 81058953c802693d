#include "fairaudit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "fairaudit/csv.hpp"
#include "fairaudit/drift.hpp"
#include "fairaudit/error.hpp"
#include "fairaudit/pipeline.hpp"
#include "fairaudit/plots.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::empty_cell, "no values to summarize");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

EffectMark effectiveness_mark(double baseline_mean, double mitigated_mean) {
  EffectMark m;
  if (baseline_mean == 0.0) {
    m.zero_baseline = true;
    return m;
  }
  m.improvement = (baseline_mean - mitigated_mean) / baseline_mean;
  m.effective = m.improvement > 0.25;
  return m;
}

CellSummary summarize(std::span<const RunResult> results) {
  if (results.empty()) fail(ErrorCode::empty_cell, "cell has no runs");
  const auto& first = results.front();
  CellSummary c{first.model, first.split, first.feature, first.mitigation, results.size(), {}, {}, {}, {}, {}, std::nullopt};
  std::vector<double> mae, r2, delta, lo, hi;
  for (const auto& r : results) {
    if (r.model != c.model || r.split != c.split || r.feature != c.feature || r.mitigation != c.mitigation)
      fail(ErrorCode::invalid_argument, "runs from different cells summarized together");
    mae.push_back(r.mae);
    r2.push_back(r.r2);
    delta.push_back(r.disparity.delta_mae);
    lo.push_back(r.disparity.mae_low);
    hi.push_back(r.disparity.mae_high);
  }
  c.mae = summarize(std::span<const double>(mae));
  c.r2 = summarize(std::span<const double>(r2));
  c.delta_mae = summarize(std::span<const double>(delta));
  c.mae_low = summarize(std::span<const double>(lo));
  c.mae_high = summarize(std::span<const double>(hi));
  return c;
}

std::vector<std::string> SensitiveFeatures::all() const {
  auto out = race;
  out.insert(out.end(), religion.begin(), religion.end());
  return out;
}

bool ExperimentResult::all_completed() const {
  return std::all_of(manifest.begin(), manifest.end(), [](const ManifestEntry& e) { return e.completed; });
}

std::uint64_t cell_seed(std::uint64_t master, const std::string& model, const std::string& split,
                        const std::string& feature, const std::string& mitigation, std::size_t run) {
  return derive_seed(master, {model, split, feature, mitigation}, run);
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (models.empty()) fail(ErrorCode::invalid_config, "config lists no models");
  if (splits.empty()) fail(ErrorCode::invalid_config, "config lists no splits");
  if (runs < 1) fail(ErrorCode::invalid_config, "runs must be >= 1");
  if (jobs < 1) fail(ErrorCode::invalid_config, "jobs must be >= 1");
  if (!synthetic && (schema_path.empty() || data_paths.empty()))
    fail(ErrorCode::invalid_config, "config needs a schema and data paths, or a synthetic block");
  std::set<std::string> names;
  for (const auto& s : splits) {
    s.spec.validate();
    if (!names.insert(s.name).second) fail(ErrorCode::invalid_config, "duplicate split name '" + s.name + "'");
  }
  for (const auto& m : mitigations) m.validate();
  if (synthetic) synthetic->validate();
  if (drift_cohorts && (drift_cohorts->first.empty() || drift_cohorts->second.empty()))
    fail(ErrorCode::invalid_config, "drift cohorts must both list years");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
  namespace fs = std::filesystem;
  auto resolve = [&](const std::string& p) {
    if (base_dir.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
  };
  ExperimentConfig c;
  try {
    if (!j.is_object()) fail(ErrorCode::invalid_config, "config must be a JSON object");
    if (j.contains("schema")) c.schema_path = resolve(j.at("schema").get<std::string>());
    if (j.contains("data"))
      for (const auto& p : j.at("data")) c.data_paths.push_back(resolve(p.get<std::string>()));
    if (j.contains("synthetic")) c.synthetic = SynthConfig::from_json(j.at("synthetic"));
    for (const auto& m : j.value("models", nlohmann::json::array())) c.models.push_back(ModelSpec::from_json(m));
    for (const auto& s : j.value("splits", nlohmann::json::array())) {
      NamedSplit ns{s.value("name", std::string()), SplitSpec::from_json(s)};
      if (ns.name.empty()) ns.name = ns.spec.label();
      c.splits.push_back(std::move(ns));
    }
    if (j.contains("sensitive_features")) {
      const auto& sf = j.at("sensitive_features");
      c.sensitive_features.race = sf.value("race", std::vector<std::string>{});
      c.sensitive_features.religion = sf.value("religion", std::vector<std::string>{});
    }
    for (const auto& m : j.value("mitigations", nlohmann::json::array())) c.mitigations.push_back(MitigationSpec::from_json(m));
    c.runs = j.value("runs", c.runs);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.jobs = j.value("jobs", c.jobs);
    c.ablation = j.value("ablation", c.ablation);
    c.intersection = j.value("intersection", c.intersection);
    const auto weighting = j.value("intersect_weighting", std::string("uniform"));
    if (weighting == "uniform") c.intersect_options.weighting = AverageWeighting::uniform;
    else if (weighting == "sample_count") c.intersect_options.weighting = AverageWeighting::sample_count;
    else fail(ErrorCode::invalid_config, "intersect_weighting must be uniform or sample_count");
    c.intersect_options.min_subgroup = j.value("min_subgroup", c.intersect_options.min_subgroup);
    if (j.contains("drift") && !j.at("drift").is_null())
      c.drift_cohorts = std::make_pair(j.at("drift").at("cohort_a").get<std::vector<int>>(),
                                       j.at("drift").at("cohort_b").get<std::vector<int>>());
    c.plots = j.value("plots", c.plots);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::io, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, path + ": " + e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// Runner

namespace {

struct Failure {
  std::string feature;
  std::string mitigation;
  std::size_t run = 0;
  std::string reason;
};

struct IntersectOutput {
  AuditReport single;
  IntersectionReport inter;
  std::vector<BlindSpot> blind_spots;
};

struct TaskOutput {
  std::vector<RunResult> results;
  std::vector<Failure> failures;
  std::optional<IntersectOutput> intersect;
  std::optional<AblationReport> ablation;
  std::string extra_failure;  // ablation or intersection failure
};

struct Task {
  enum class Kind { baseline, mitigated, ablation } kind = Kind::baseline;
  std::size_t model = 0;
  std::size_t split = 0;
  std::size_t run = 0;
  std::size_t mitigation = 0;
  std::string feature;
};

struct Grid {
  const ExperimentConfig& config;
  const JoinedTable& table;
  std::vector<std::string> model_names;
  std::vector<std::string> features;
  std::vector<std::string> race;
  std::vector<std::string> religion;

  SplitSpec split_for(std::size_t s, std::size_t run) const {
    SplitSpec spec = config.splits[s].spec;
    if (auto* r = std::get_if<RandomSplit>(&spec.mode))
      r->seed = derive_seed(config.master_seed, {"split", config.splits[s].name}, run) ^ r->seed;
    return spec;
  }

  ModelSpec model_for(std::size_t m, std::uint64_t seed) const {
    ModelSpec spec = config.models[m];
    spec.seed = derive_seed(seed, {"model"}, spec.seed);
    return spec;
  }

  RunResult base_result(const Task& t, const std::string& feature, const std::string& mitigation, std::uint64_t seed) const {
    RunResult r;
    r.model = model_names[t.model];
    r.split = config.splits[t.split].name;
    r.feature = feature;
    r.mitigation = mitigation;
    r.run = t.run;
    r.seed = seed;
    return r;
  }

  TaskOutput execute(const Task& t) const {
    TaskOutput out;
    const auto& split_name = config.splits[t.split].name;
    const auto& model_name = model_names[t.model];
    switch (t.kind) {
      case Task::Kind::baseline: {
        const auto seed = cell_seed(config.master_seed, model_name, split_name, "*", kBaseline, t.run);
        try {
          const auto prepared = prepare_split(table, split_for(t.split, t.run));
          const auto model = train(model_for(t.model, seed), prepared.train);
          const auto y = prepared.test.target_vector();
          const auto yhat = model.predict(prepared.test);
          const double m = mae(y, yhat), q = r2(y, yhat);
          for (const auto& f : features) {
            try {
              auto r = base_result(t, f, kBaseline, seed);
              r.mae = m;
              r.r2 = q;
              r.disparity = delta_mae(y, yhat, assign_groups(prepared.test, f));
              out.results.push_back(std::move(r));
            } catch (const Error& e) {
              out.failures.push_back({f, kBaseline, t.run, e.what()});
            }
          }
          if (config.intersection && t.run == 0) {
            try {
              IntersectOutput io;
              io.single = single_feature_audit(model, prepared.test, features);
              io.inter = intersect_audit(model, prepared.test, race, religion, config.intersect_options);
              io.blind_spots = blind_spot_screen(io.single, io.inter);
              out.intersect = std::move(io);
            } catch (const Error& e) {
              out.extra_failure = e.what();
            }
          }
        } catch (const Error& e) {
          for (const auto& f : features) out.failures.push_back({f, kBaseline, t.run, e.what()});
          if (config.intersection && t.run == 0) out.extra_failure = e.what();
        }
        break;
      }
      case Task::Kind::mitigated: {
        auto mspec = config.mitigations[t.mitigation];
        const std::string label = mspec.label();
        const auto seed = cell_seed(config.master_seed, model_name, split_name, t.feature, label, t.run);
        try {
          const auto prepared = prepare_split(table, split_for(t.split, t.run));
          mspec.feature = t.feature;
          mspec.seed = derive_seed(seed, {"mitigation"}, mspec.seed);
          const auto aug = apply(mspec, prepared.train);
          std::optional<std::span<const double>> w;
          if (aug.weights) w = std::span<const double>(*aug.weights);
          const auto model = train(model_for(t.model, seed), aug.data, w);
          const auto y = prepared.test.target_vector();
          const auto yhat = model.predict(prepared.test);
          auto r = base_result(t, t.feature, label, seed);
          r.mae = mae(y, yhat);
          r.r2 = r2(y, yhat);
          r.disparity = delta_mae(y, yhat, assign_groups(prepared.test, t.feature));
          out.results.push_back(std::move(r));
        } catch (const Error& e) {
          out.failures.push_back({t.feature, label, t.run, e.what()});
        }
        break;
      }
      case Task::Kind::ablation: {
        const auto seed = cell_seed(config.master_seed, model_name, split_name, "*", "ablation", t.run);
        try {
          const auto prepared = prepare_split(table, split_for(t.split, t.run));
          out.ablation = ablation_audit(model_for(t.model, seed), prepared.train, prepared.test, features);
        } catch (const Error& e) {
          out.extra_failure = e.what();
        }
        break;
      }
    }
    return out;
  }
};

std::vector<std::string> unique_model_names(const std::vector<ModelSpec>& models) {
  std::map<std::string, std::size_t> count;
  for (const auto& m : models) ++count[m.label()];
  std::map<std::string, std::size_t> seen;
  std::vector<std::string> out;
  for (const auto& m : models) {
    const auto l = m.label();
    out.push_back(count[l] > 1 ? l + "_" + std::to_string(++seen[l]) : l);
  }
  return out;
}

std::string pm(const MetricSummary& s) { return csv::fixed(s.mean, 2) + " ± " + csv::fixed(s.stddev, 2); }

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::string dir) : dir_(std::move(dir)) {}

  void write(const std::string& rel, const std::string& content, std::vector<std::string>& artifacts) {
    namespace fs = std::filesystem;
    const auto path = fs::path(dir_) / rel;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorCode::io, "cannot create '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io, "cannot write '" + path.string() + "'");
    f << content;
    if (!f) fail(ErrorCode::io, "write failed for '" + path.string() + "'");
    artifacts.push_back(rel);
  }

 private:
  std::string dir_;
};

std::string safe_name(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();

  JoinedTable table;
  if (config.synthetic) {
    const auto data = generate_fixture(*config.synthetic);
    table = join_and_clean(data.tables, data.schema);
  } else {
    table = ingest(FeatureSchema::load(config.schema_path), config.data_paths);
  }

  Grid grid{config, table, unique_model_names(config.models), {}, config.sensitive_features.race,
            config.sensitive_features.religion};
  if (grid.race.empty() && grid.religion.empty()) {
    grid.race = table.schema.sensitive(SensitiveClass::race);
    grid.religion = table.schema.sensitive(SensitiveClass::religion);
  }
  grid.features = grid.race;
  grid.features.insert(grid.features.end(), grid.religion.begin(), grid.religion.end());
  if (grid.features.empty()) fail(ErrorCode::invalid_config, "no sensitive features to audit");
  for (const auto& f : grid.features)
    if (!table.schema.index_of(f)) fail(ErrorCode::invalid_config, "sensitive feature '" + f + "' is not in the schema");

  std::vector<Task> tasks;
  for (std::size_t m = 0; m < config.models.size(); ++m)
    for (std::size_t s = 0; s < config.splits.size(); ++s)
      for (std::size_t r = 0; r < config.runs; ++r) {
        tasks.push_back({Task::Kind::baseline, m, s, r, 0, ""});
        for (std::size_t k = 0; k < config.mitigations.size(); ++k)
          for (const auto& f : grid.features) tasks.push_back({Task::Kind::mitigated, m, s, r, k, f});
        if (config.ablation) tasks.push_back({Task::Kind::ablation, m, s, r, 0, ""});
      }

  std::vector<TaskOutput> outputs(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        outputs[i] = grid.execute(tasks[i]);
      } catch (const std::exception& e) {
        // Anything not already mapped to a cell failure, e.g. bad_alloc.
        outputs[i].failures.push_back({tasks[i].feature, "*", tasks[i].run, e.what()});
      }
    }
  };
  const std::size_t n_threads = std::min(config.jobs, std::max<std::size_t>(tasks.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentResult result;
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, std::vector<RunResult>> by_cell;
  std::map<Key, std::string> failed;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    const auto& model = grid.model_names[t.model];
    const auto& split = config.splits[t.split].name;
    for (auto& r : outputs[i].results) {
      by_cell[{r.model, r.split, r.feature, r.mitigation}].push_back(r);
      result.runs.push_back(r);
    }
    for (const auto& f : outputs[i].failures) {
      std::vector<std::string> feats = f.feature.empty() ? grid.features : std::vector<std::string>{f.feature};
      std::string mit = f.mitigation;
      if (mit == "*") mit = t.kind == Task::Kind::mitigated ? config.mitigations[t.mitigation].label() : kBaseline;
      for (const auto& feat : feats) {
        auto& reason = failed[{model, split, feat, mit}];
        if (reason.empty()) reason = "run " + std::to_string(f.run) + ": " + f.reason;
      }
    }
  }

  std::vector<std::string> columns{kBaseline};
  for (const auto& m : config.mitigations) columns.push_back(m.label());
  for (const auto& model : grid.model_names)
    for (const auto& split : config.splits)
      for (const auto& f : grid.features)
        for (const auto& col : columns) {
          const Key key{model, split.name, f, col};
          ManifestEntry e{model, split.name, f, col, true, ""};
          if (auto it = failed.find(key); it != failed.end()) {
            e.completed = false;
            e.reason = it->second;
          } else {
            auto& runs = by_cell[key];
            std::sort(runs.begin(), runs.end(), [](const RunResult& a, const RunResult& b) { return a.run < b.run; });
            result.cells.push_back(summarize(std::span<const RunResult>(runs)));
          }
          result.manifest.push_back(std::move(e));
        }

  // Marks against the baseline of the same (model, split, feature).
  std::map<std::tuple<std::string, std::string, std::string>, double> baseline_delta;
  for (const auto& c : result.cells)
    if (c.mitigation == kBaseline) baseline_delta[{c.model, c.split, c.feature}] = c.delta_mae.mean;
  for (auto& c : result.cells) {
    if (c.mitigation == kBaseline) continue;
    if (auto it = baseline_delta.find({c.model, c.split, c.feature}); it != baseline_delta.end())
      c.effect = effectiveness_mark(it->second, c.delta_mae.mean);
  }
  std::sort(result.runs.begin(), result.runs.end(), [&](const RunResult& a, const RunResult& b) {
    return std::tie(a.model, a.split, a.feature, a.mitigation, a.run) < std::tie(b.model, b.split, b.feature, b.mitigation, b.run);
  });

  // Extras: ablation, intersection and drift.
  std::map<std::pair<std::string, std::string>, std::vector<AblationReport>> ablations;
  std::map<std::pair<std::string, std::string>, IntersectOutput> intersections;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    const std::pair<std::string, std::string> ms{grid.model_names[t.model], config.splits[t.split].name};
    if (t.kind == Task::Kind::ablation) {
      if (outputs[i].ablation) ablations[ms].push_back(*outputs[i].ablation);
      else result.manifest.push_back({ms.first, ms.second, "*", "ablation", false,
                                      "run " + std::to_string(t.run) + ": " + outputs[i].extra_failure});
    }
    if (t.kind == Task::Kind::baseline && config.intersection && t.run == 0) {
      if (outputs[i].intersect) intersections[ms] = *outputs[i].intersect;
      else result.manifest.push_back({ms.first, ms.second, "*", "intersection", false, outputs[i].extra_failure});
    }
  }

  std::optional<DriftReport> drift;
  std::optional<Projection> projection;
  std::optional<EncodedDataset> encoded_all;
  if (config.drift_cohorts) {
    try {
      encoded_all = encode_all(table);
      drift = drift_report(*encoded_all, config.drift_cohorts->first, config.drift_cohorts->second);
      projection = project_2d(encoded_all->matrix());
    } catch (const Error& e) {
      result.manifest.push_back({"*", "*", "*", "drift", false, e.what()});
    }
  }

  if (config.output_dir.empty()) return result;

  // Serialized writing, after every worker has finished.
  ArtifactWriter out(config.output_dir);
  auto& arts = result.artifacts;

  {
    std::ostringstream s;
    csv::write_record(s, {"model", "split", "feature", "mitigation", "run", "seed", "mae", "r2", "mae_low", "mae_high",
                          "delta_mae", "n_low", "n_high"});
    for (const auto& r : result.runs)
      csv::write_record(s, {r.model, r.split, r.feature, r.mitigation, std::to_string(r.run), std::to_string(r.seed),
                            csv::fixed(r.mae), csv::fixed(r.r2), csv::fixed(r.disparity.mae_low),
                            csv::fixed(r.disparity.mae_high), csv::fixed(r.disparity.delta_mae),
                            std::to_string(r.disparity.n_low), std::to_string(r.disparity.n_high)});
    out.write("runs.csv", s.str(), arts);
  }
  {
    std::ostringstream s;
    csv::write_record(s, {"model", "split", "feature", "mitigation", "runs", "mae_mean", "mae_std", "r2_mean", "r2_std",
                          "mae_low_mean", "mae_high_mean", "delta_mae_mean", "delta_mae_std", "improvement", "effective",
                          "zero_baseline"});
    for (const auto& c : result.cells)
      csv::write_record(s, {c.model, c.split, c.feature, c.mitigation, std::to_string(c.runs), csv::fixed(c.mae.mean),
                            csv::fixed(c.mae.stddev), csv::fixed(c.r2.mean), csv::fixed(c.r2.stddev),
                            csv::fixed(c.mae_low.mean), csv::fixed(c.mae_high.mean), csv::fixed(c.delta_mae.mean),
                            csv::fixed(c.delta_mae.stddev), c.effect ? csv::fixed(c.effect->improvement) : "",
                            c.effect ? (c.effect->effective ? "true" : "false") : "",
                            c.effect ? (c.effect->zero_baseline ? "true" : "false") : ""});
    out.write("summary.csv", s.str(), arts);
  }

  auto find_cell = [&](const std::string& model, const std::string& split, const std::string& f,
                       const std::string& mit) -> const CellSummary* {
    for (const auto& c : result.cells)
      if (c.model == model && c.split == split && c.feature == f && c.mitigation == mit) return &c;
    return nullptr;
  };

  {
    // Baseline accuracy per model and split; every feature shares the same baseline model.
    std::ostringstream s;
    s << "| Model |";
    for (const auto& sp : config.splits) s << ' ' << sp.name << " MAE | " << sp.name << " R² |";
    s << "\n|---|";
    for (std::size_t i = 0; i < config.splits.size(); ++i) s << "---:|---:|";
    s << '\n';
    for (const auto& model : grid.model_names) {
      s << "| " << model << " |";
      for (const auto& sp : config.splits) {
        const CellSummary* c = nullptr;
        for (const auto& f : grid.features)
          if ((c = find_cell(model, sp.name, f, kBaseline))) break;
        if (c) s << ' ' << pm(c->mae) << " | " << pm(c->r2) << " |";
        else s << " failed | failed |";
      }
      s << '\n';
    }
    out.write("table1.md", s.str(), arts);
  }
  {
    std::ostringstream s;
    s << "dMAE mean ± population std over " << config.runs << " run(s). Underlined cells improve on the baseline by more than 25%.\n";
    for (const auto& sp : config.splits) {
      s << "\n### " << sp.name << "\n\n| Feature | Model |";
      for (const auto& col : columns) s << ' ' << col << " |";
      s << "\n|---|---|";
      for (std::size_t i = 0; i < columns.size(); ++i) s << "---:|";
      s << '\n';
      for (const auto& f : grid.features)
        for (const auto& model : grid.model_names) {
          s << "| " << f << " | " << model << " |";
          for (const auto& col : columns) {
            const auto* c = find_cell(model, sp.name, f, col);
            if (!c) s << " failed |";
            else if (c->effect && c->effect->effective) s << " <u>" << pm(c->delta_mae) << "</u> |";
            else s << ' ' << pm(c->delta_mae) << (c->effect && c->effect->zero_baseline ? " (zero baseline)" : "") << " |";
          }
          s << '\n';
        }
    }
    out.write("table2.md", s.str(), arts);
  }

  if (!ablations.empty()) {
    std::ostringstream md, cs;
    csv::write_record(cs, {"model", "split", "feature", "runs", "delta_with", "delta_without", "abs_diff"});
    md << "| Model | Split | Feature | dMAE with | dMAE without | abs Diff |\n|---|---|---|---:|---:|---:|\n";
    for (const auto& [ms, reports] : ablations)
      for (const auto& f : grid.features) {
        std::vector<double> with, without, diff;
        for (const auto& rep : reports)
          for (const auto& rec : rep.records)
            if (rec.feature == f) {
              with.push_back(rec.delta_with);
              without.push_back(rec.delta_without);
              diff.push_back(rec.abs_diff);
            }
        if (with.empty()) continue;
        const auto a = summarize(std::span<const double>(with)), b = summarize(std::span<const double>(without)),
                   d = summarize(std::span<const double>(diff));
        csv::write_record(cs, {ms.first, ms.second, f, std::to_string(with.size()), csv::fixed(a.mean), csv::fixed(b.mean),
                               csv::fixed(d.mean)});
        md << "| " << ms.first << " | " << ms.second << " | " << f << " | " << pm(a) << " | " << pm(b) << " | " << pm(d)
           << " |\n";
      }
    out.write("table3.csv", cs.str(), arts);
    out.write("table3.md", md.str(), arts);
  }

  if (!intersections.empty()) {
    nlohmann::json spots = nlohmann::json::array();
    for (const auto& [ms, io] : intersections) {
      const auto stem = "table4_" + safe_name(ms.first) + "_" + safe_name(ms.second);
      std::ostringstream cs, md, js;
      write_intersection_csv(io.inter, cs);
      write_intersection_markdown(io.inter, md);
      out.write(stem + ".csv", cs.str(), arts);
      out.write(stem + ".md", md.str(), arts);
      nlohmann::json flagged = nlohmann::json::array();
      for (const auto& b : io.blind_spots)
        flagged.push_back({{"feature", b.feature}, {"single_delta", b.single_delta}, {"intersectional", b.intersectional}});
      spots.push_back({{"model", ms.first}, {"split", ms.second}, {"flagged", flagged}});
    }
    out.write("blind_spots.json", spots.dump(2) + "\n", arts);
  }

  if (drift) {
    out.write("drift.json", drift->to_json().dump(2) + "\n", arts);
    std::ostringstream s;
    write_projection_csv(*encoded_all, *projection, s);
    out.write("projection.csv", s.str(), arts);
  }

  if (config.plots) {
    try {
      const auto& target = table.schema.target().name;
      const auto trend = trend_plot(table, target);
      out.write("plots/trend_" + safe_name(target) + ".svg", trend.svg, arts);
      const auto y = table.numeric_column(target);
      for (const auto& f : grid.features) {
        try {
          const auto x = min_max_scale(table.numeric_column(f));
          const auto sc = scatter_regression_plot(x, y, f + " (min-max scaled)", target);
          out.write("plots/scatter_" + safe_name(f) + ".svg", sc.svg, arts);
        } catch (const Error& e) {
          result.manifest.push_back({"*", "*", f, "plots", false, e.what()});
        }
      }
    } catch (const Error& e) {
      result.manifest.push_back({"*", "*", "*", "plots", false, e.what()});
    }
  }

  nlohmann::json manifest;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& e : result.manifest) {
    nlohmann::json j = {{"model", e.model}, {"split", e.split}, {"feature", e.feature}, {"mitigation", e.mitigation},
                        {"status", e.completed ? "completed" : "failed"}};
    if (!e.completed) j["reason"] = e.reason;
    cells.push_back(std::move(j));
  }
  nlohmann::json models = nlohmann::json::array();
  for (std::size_t m = 0; m < config.models.size(); ++m) {
    auto j = config.models[m].to_json();
    j["name"] = grid.model_names[m];
    models.push_back(std::move(j));
  }
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& sp : config.splits) {
    auto j = sp.spec.to_json();
    j["name"] = sp.name;
    splits.push_back(std::move(j));
  }
  nlohmann::json mitigations = nlohmann::json::array();
  for (const auto& m : config.mitigations) mitigations.push_back(m.to_json());
  manifest["config"] = {{"models", models},
                        {"splits", splits},
                        {"mitigations", mitigations},
                        {"sensitive_features", {{"race", grid.race}, {"religion", grid.religion}}},
                        {"runs", config.runs},
                        {"master_seed", config.master_seed}};
  manifest["rows"] = table.rows.size();
  manifest["cells"] = cells;
  manifest["all_completed"] = result.all_completed();
  auto listed = arts;
  listed.push_back("manifest.json");
  manifest["artifacts"] = listed;
  out.write("manifest.json", manifest.dump(2) + "\n", arts);
  return result;
}

}  // namespace fairaudit
