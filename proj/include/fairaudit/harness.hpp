#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairaudit/dataset.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/intersectional.hpp"
#include "fairaudit/mitigation.hpp"
#include "fairaudit/regressors.hpp"
#include "fairaudit/synth.hpp"

namespace fairaudit {

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

MetricSummary summarize(std::span<const double> values);

struct EffectMark {
  bool effective = false;
  bool zero_baseline = false;
  double improvement = 0.0;  // (baseline - mitigated) / baseline
};

/// Effective iff the mitigated mean improves on the baseline by strictly more than 25%.
EffectMark effectiveness_mark(double baseline_mean, double mitigated_mean);

inline constexpr const char* kBaseline = "none";

struct RunResult {
  std::string model;
  std::string split;
  std::string feature;
  std::string mitigation;  // kBaseline for the unmitigated model
  std::size_t run = 0;
  std::uint64_t seed = 0;
  double mae = 0.0;
  double r2 = 0.0;
  DisparityRecord disparity;
};

struct CellSummary {
  std::string model;
  std::string split;
  std::string feature;
  std::string mitigation;
  std::size_t runs = 0;
  MetricSummary mae;
  MetricSummary r2;
  MetricSummary delta_mae;
  MetricSummary mae_low;
  MetricSummary mae_high;
  std::optional<EffectMark> effect;  // set for mitigated cells
};

/// Mean and population stddev of every metric over the runs of one cell.
CellSummary summarize(std::span<const RunResult> results);

struct SensitiveFeatures {
  std::vector<std::string> race;
  std::vector<std::string> religion;

  std::vector<std::string> all() const;
};

struct NamedSplit {
  std::string name;
  SplitSpec spec;
};

struct ExperimentConfig {
  std::string schema_path;
  std::vector<std::string> data_paths;
  std::optional<SynthConfig> synthetic;

  std::vector<ModelSpec> models;
  std::vector<NamedSplit> splits;
  SensitiveFeatures sensitive_features;
  std::vector<MitigationSpec> mitigations;  // feature and seed are filled per cell
  std::size_t runs = 10;
  std::uint64_t master_seed = 0;
  std::string output_dir;
  std::size_t jobs = 1;

  bool ablation = false;
  bool intersection = false;
  IntersectOptions intersect_options;
  std::optional<std::pair<std::vector<int>, std::vector<int>>> drift_cohorts;
  bool plots = true;

  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir = "");
  static ExperimentConfig load(const std::string& path);
};

struct ManifestEntry {
  std::string model;
  std::string split;
  std::string feature;
  std::string mitigation;
  bool completed = true;
  std::string reason;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::vector<CellSummary> cells;
  std::vector<ManifestEntry> manifest;
  std::vector<std::string> artifacts;  // files written, relative to the output directory

  bool all_completed() const;
  /// 0 when every cell completed, 1 otherwise.
  int exit_code() const { return all_completed() ? 0 : 1; }
};

/// Runs the whole grid. Cells are scheduled on `config.jobs` worker threads;
/// every cell draws from seeds derived from the master seed so the outputs do
/// not depend on scheduling. Artifacts are written when output_dir is set.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Seed of one (model, split, feature, mitigation, run) cell.
std::uint64_t cell_seed(std::uint64_t master, const std::string& model, const std::string& split,
                        const std::string& feature, const std::string& mitigation, std::size_t run);

}  // namespace fairaudit
