#include "fairaudit/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "fairaudit/csv.hpp"
#include "fairaudit/error.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

std::string_view to_string(MitigationMethod method) {
  switch (method) {
    case MitigationMethod::oversample: return "oversample";
    case MitigationMethod::mixup: return "mixup";
    case MitigationMethod::perturb: return "perturb";
    case MitigationMethod::reweight: return "reweight";
  }
  return "?";
}

MitigationMethod mitigation_method_from_string(std::string_view name) {
  if (name == "oversample" || name == "os") return MitigationMethod::oversample;
  if (name == "mixup") return MitigationMethod::mixup;
  if (name == "perturb" || name == "perturbation") return MitigationMethod::perturb;
  if (name == "reweight" || name == "rw") return MitigationMethod::reweight;
  fail(ErrorCode::invalid_config, "unknown mitigation method '" + std::string(name) + "'");
}

std::string_view to_string(SampleOrigin origin) {
  switch (origin) {
    case SampleOrigin::original: return "original";
    case SampleOrigin::duplicated: return "duplicated";
    case SampleOrigin::synthetic: return "synthetic";
  }
  return "?";
}

void MitigationSpec::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorCode::invalid_config, "mixup alpha must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail(ErrorCode::invalid_config, "perturbation sigma must be >= 0");
}

MitigationSpec MitigationSpec::from_json(const nlohmann::json& j) {
  MitigationSpec s;
  if (j.is_string()) {
    s.method = mitigation_method_from_string(j.get<std::string>());
  } else if (j.is_object()) {
    if (!j.contains("method")) fail(ErrorCode::invalid_config, "mitigation entry lacks \"method\"");
    s.method = mitigation_method_from_string(j.at("method").get<std::string>());
    s.feature = j.value("feature", std::string());
    s.alpha = j.value("alpha", s.alpha);
    s.sigma = j.value("sigma", s.sigma);
    s.seed = j.value("seed", s.seed);
  } else {
    fail(ErrorCode::invalid_config, "mitigation must be a name or an object");
  }
  s.validate();
  return s;
}

nlohmann::json MitigationSpec::to_json() const {
  nlohmann::json j = {{"method", std::string(to_string(method))}, {"seed", seed}};
  if (!feature.empty()) j["feature"] = feature;
  if (method == MitigationMethod::mixup) j["alpha"] = alpha;
  if (method == MitigationMethod::perturb) j["sigma"] = sigma;
  return j;
}

void AugmentedTrainSet::write_csv(std::ostream& out) const {
  csv::Record header = data.feature_names();
  header.insert(header.end(), {"__ward", "__year", "__target", "__origin", "__source", "__weight"});
  csv::write_record(out, header);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& s = data.samples[i];
    csv::Record rec;
    rec.reserve(header.size());
    for (double v : s.x) rec.push_back(csv::exact(v));
    rec.push_back(s.ward);
    rec.push_back(std::to_string(s.year));
    rec.push_back(csv::exact(s.y));
    rec.emplace_back(to_string(origin[i]));
    rec.push_back(std::to_string(source[i]));
    rec.push_back(csv::exact(weights ? (*weights)[i] : 1.0));
    csv::write_record(out, rec);
  }
}

namespace {

double percentile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void check_groups(const EncodedDataset& train, const GroupAssignment& groups) {
  if (groups.low.empty() || groups.high.empty())
    fail(ErrorCode::empty_group, "feature '" + groups.feature + "' has an empty group");
  for (auto i : groups.low)
    if (i >= train.size()) fail(ErrorCode::invalid_argument, "group index outside the training set");
  for (auto i : groups.high)
    if (i >= train.size()) fail(ErrorCode::invalid_argument, "group index outside the training set");
}

AugmentedTrainSet identity(const EncodedDataset& train) {
  AugmentedTrainSet out;
  out.data = train;
  out.origin.assign(train.size(), SampleOrigin::original);
  out.source.resize(train.size());
  std::iota(out.source.begin(), out.source.end(), std::size_t{0});
  return out;
}

// Minority rows bucketed by target quartile, with how many extra rows each
// bucket needs for the groups to balance.
struct Plan {
  std::array<std::vector<std::size_t>, 4> members;
  std::array<std::size_t, 4> extra{};
  std::size_t total() const { return extra[0] + extra[1] + extra[2] + extra[3]; }
};

Plan plan_balance(const EncodedDataset& train, const GroupAssignment& groups) {
  Plan plan;
  const auto& minority = groups.low.size() < groups.high.size() ? groups.low : groups.high;
  const std::size_t target = std::max(groups.low.size(), groups.high.size());
  if (minority.size() == target) return plan;
  const auto strata = target_strata(train.target_vector());
  std::array<std::size_t, 4> counts{};
  for (auto i : minority) {
    const auto k = static_cast<std::size_t>(strata[i]);
    plan.members[k].push_back(i);
    ++counts[k];
  }
  plan.extra = allocate_deficit(counts, target);
  return plan;
}

}  // namespace

std::vector<int> target_strata(std::span<const double> y) {
  if (y.empty()) return {};
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = percentile(sorted, 0.25), q2 = percentile(sorted, 0.5), q3 = percentile(sorted, 0.75);
  std::vector<int> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] <= q1 ? 0 : y[i] <= q2 ? 1 : y[i] <= q3 ? 2 : 3;
  return out;
}

std::array<std::size_t, 4> allocate_deficit(const std::array<std::size_t, 4>& minority_counts, std::size_t target) {
  const std::size_t n = std::accumulate(minority_counts.begin(), minority_counts.end(), std::size_t{0});
  if (n == 0) fail(ErrorCode::empty_group, "minority group is empty");
  if (target < n) fail(ErrorCode::invalid_argument, "target is below the current minority size");

  std::array<std::size_t, 4> final_counts{};
  std::array<double, 4> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double exact = static_cast<double>(target) * static_cast<double>(minority_counts[k]) / static_cast<double>(n);
    final_counts[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(final_counts[k]);
    assigned += final_counts[k];
  }
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < target; ++r) {
    const auto k = order[r % 4];
    if (minority_counts[k] == 0) continue;
    ++final_counts[k];
    ++assigned;
  }
  std::array<std::size_t, 4> extra{};
  for (std::size_t k = 0; k < 4; ++k) extra[k] = final_counts[k] - std::min(final_counts[k], minority_counts[k]);
  return extra;
}

AugmentedTrainSet oversample(const EncodedDataset& train, const GroupAssignment& groups, std::uint64_t seed) {
  check_groups(train, groups);
  auto out = identity(train);
  const auto plan = plan_balance(train, groups);
  Rng rng(derive_seed(seed, {"oversample"}));
  out.data.samples.reserve(train.size() + plan.total());
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& pool = plan.members[k];
    for (std::size_t e = 0; e < plan.extra[k]; ++e) {
      const auto src = pool[rng.below(pool.size())];
      out.data.samples.push_back(train.samples[src]);
      out.origin.push_back(SampleOrigin::duplicated);
      out.source.push_back(src);
    }
  }
  return out;
}

Sample mix_samples(const Sample& a, const Sample& b, double lambda) {
  if (a.x.size() != b.x.size() || a.sensitive.size() != b.sensitive.size())
    fail(ErrorCode::dimension_mismatch, "mixed samples differ in shape");
  auto mix = [lambda](double p, double q) { return lambda * p + (1.0 - lambda) * q; };
  Sample s;
  s.ward = a.ward;
  s.year = a.year;
  s.x.resize(a.x.size());
  for (std::size_t j = 0; j < a.x.size(); ++j) s.x[j] = mix(a.x[j], b.x[j]);
  s.y = mix(a.y, b.y);
  s.sensitive.resize(a.sensitive.size());
  for (std::size_t j = 0; j < a.sensitive.size(); ++j) s.sensitive[j] = mix(a.sensitive[j], b.sensitive[j]);
  return s;
}

AugmentedTrainSet mixup(const EncodedDataset& train, const GroupAssignment& groups, double alpha, std::uint64_t seed) {
  check_groups(train, groups);
  if (!(alpha > 0.0)) fail(ErrorCode::invalid_argument, "mixup alpha must be positive");
  const auto& minority = groups.low.size() < groups.high.size() ? groups.low : groups.high;
  if (minority.size() < 2) fail(ErrorCode::singleton_group, "mixup needs at least two minority samples");
  auto out = identity(train);
  const auto plan = plan_balance(train, groups);
  Rng rng(derive_seed(seed, {"mixup"}));
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& pool = plan.members[k];
    for (std::size_t e = 0; e < plan.extra[k]; ++e) {
      const auto p1 = pool[rng.below(pool.size())];
      const auto p2 = pool[rng.below(pool.size())];
      const double lambda = rng.beta(alpha, alpha);
      out.data.samples.push_back(mix_samples(train.samples[p1], train.samples[p2], lambda));
      out.origin.push_back(SampleOrigin::synthetic);
      out.source.push_back(p1);
    }
  }
  return out;
}

AugmentedTrainSet perturb(const EncodedDataset& train, const GroupAssignment& groups, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) fail(ErrorCode::invalid_argument, "perturbation sigma must be >= 0");
  auto out = oversample(train, groups, seed);
  if (sigma == 0.0) return out;
  std::vector<std::size_t> numeric;
  for (std::size_t j = 0; j < train.encoder.features.size(); ++j)
    if (train.encoder.features[j].type == FeatureType::numeric) numeric.push_back(j);
  Rng rng(derive_seed(seed, {"perturb"}));
  for (std::size_t i = train.size(); i < out.data.samples.size(); ++i)
    for (auto j : numeric) out.data.samples[i].x[j] += sigma * rng.normal();
  return out;
}

GroupWeights group_weights(std::size_t n_low, std::size_t n_high) {
  if (n_low == 0 || n_high == 0) fail(ErrorCode::empty_group, "reweighting needs two non-empty groups");
  const double n = static_cast<double>(n_low + n_high);
  return {n / (2.0 * static_cast<double>(n_low)), n / (2.0 * static_cast<double>(n_high))};
}

WeightVector reweight(const EncodedDataset& train, const GroupAssignment& groups) {
  check_groups(train, groups);
  const auto g = group_weights(groups.low.size(), groups.high.size());
  const double top = std::max(g.low, g.high);
  WeightVector w(train.size(), 0.0);
  for (auto i : groups.low) w[i] = g.low / top;
  for (auto i : groups.high) w[i] = g.high / top;
  if (groups.low.size() + groups.high.size() != train.size())
    fail(ErrorCode::invalid_argument, "group assignment does not cover the training set");
  return w;
}

AugmentedTrainSet apply(const MitigationSpec& spec, const EncodedDataset& train) {
  spec.validate();
  if (spec.feature.empty()) fail(ErrorCode::invalid_request, "mitigation needs a sensitive feature");
  if (!train.sensitive_index(spec.feature))
    fail(ErrorCode::missing_column, "'" + spec.feature + "' is not a sensitive feature of the training set");
  const auto groups = assign_groups(train, spec.feature);
  switch (spec.method) {
    case MitigationMethod::oversample: return oversample(train, groups, spec.seed);
    case MitigationMethod::mixup: return mixup(train, groups, spec.alpha, spec.seed);
    case MitigationMethod::perturb: return perturb(train, groups, spec.sigma, spec.seed);
    case MitigationMethod::reweight: {
      auto out = identity(train);
      out.weights = reweight(train, groups);
      return out;
    }
  }
  fail(ErrorCode::internal, "unhandled mitigation method");
}

}  // namespace fairaudit
