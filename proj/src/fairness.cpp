#include "fairaudit/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "json.hpp"

#include "fairaudit/csv.hpp"
#include "fairaudit/error.hpp"

namespace fairaudit {

double threshold(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::degenerate_feature, "no values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) fail(ErrorCode::degenerate_feature, "all values are equal");
  return 0.5 * (*hi + *lo);
}

void attach_thresholds(EncodedDataset& data) {
  data.thresholds.clear();
  for (const auto& name : data.sensitive_names) {
    const auto values = data.group_values(name);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (values.empty() || !(*hi > *lo)) continue;
    data.thresholds[name] = threshold(values);
  }
}

std::vector<bool> GroupAssignment::high_mask() const {
  std::vector<bool> mask(size(), false);
  for (auto i : high) {
    if (i >= mask.size()) mask.resize(i + 1, false);
    mask[i] = true;
  }
  return mask;
}

GroupAssignment assign_groups(std::span<const double> values, const std::string& feature, double T) {
  GroupAssignment g;
  g.feature = feature;
  g.threshold = T;
  for (std::size_t i = 0; i < values.size(); ++i) (values[i] < T ? g.low : g.high).push_back(i);
  if (g.low.empty() || g.high.empty())
    fail(ErrorCode::empty_group, "feature '" + feature + "' has an empty " + (g.low.empty() ? "Low" : "High") + " group");
  return g;
}

GroupAssignment assign_groups(const EncodedDataset& data, const std::string& feature, double T) {
  return assign_groups(data.group_values(feature), feature, T);
}

GroupAssignment assign_groups(const EncodedDataset& data, const std::string& feature) {
  const auto it = data.thresholds.find(feature);
  if (it == data.thresholds.end())
    fail(ErrorCode::degenerate_feature, "no threshold for '" + feature + "' (constant or not sensitive)");
  return assign_groups(data, feature, it->second);
}

DisparityRecord make_disparity(std::string feature, double mae_low, double mae_high, std::size_t n_low, std::size_t n_high) {
  return {std::move(feature), mae_low, mae_high, std::abs(mae_low - mae_high), n_low, n_high};
}

DisparityRecord delta_mae(std::span<const double> y, std::span<const double> yhat, const GroupAssignment& groups) {
  if (y.size() != yhat.size()) fail(ErrorCode::length_mismatch, "targets and predictions differ in length");
  if (groups.low.empty() || groups.high.empty()) fail(ErrorCode::empty_group, "'" + groups.feature + "' has an empty group");
  auto group_mae = [&](const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (auto i : idx) {
      if (i >= y.size()) fail(ErrorCode::invalid_argument, "group index outside the test set");
      s += std::abs(y[i] - yhat[i]);
    }
    return s / static_cast<double>(idx.size());
  };
  return make_disparity(groups.feature, group_mae(groups.low), group_mae(groups.high), groups.low.size(), groups.high.size());
}

DisparityRecord delta_mae(const TrainedModel& model, const EncodedDataset& test, const GroupAssignment& groups) {
  return delta_mae(test.target_vector(), model.predict(test), groups);
}

const DisparityRecord* AuditReport::find(std::string_view feature) const {
  for (const auto& r : records)
    if (r.feature == feature) return &r;
  return nullptr;
}

nlohmann::json AuditReport::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records)
    recs.push_back({{"feature", r.feature}, {"n_low", r.n_low}, {"n_high", r.n_high}, {"mae_low", r.mae_low},
                    {"mae_high", r.mae_high}, {"delta_mae", r.delta_mae}});
  nlohmann::json skip = nlohmann::json::array();
  for (const auto& s : skipped) skip.push_back({{"feature", s.feature}, {"reason", s.reason}});
  return {{"records", recs},
          {"skipped", skip},
          {"provenance", {{"model", provenance.model}, {"test", provenance.test}}}};
}

AuditReport single_feature_audit(std::span<const double> y, std::span<const double> yhat, const EncodedDataset& test,
                                 std::span<const std::string> features) {
  AuditReport report;
  report.provenance.test = test.fingerprint();
  for (const auto& f : features) {
    if (!test.sensitive_index(f)) {
      report.skipped.push_back({f, "not a sensitive feature of the dataset"});
      continue;
    }
    try {
      report.records.push_back(delta_mae(y, yhat, assign_groups(test, f)));
    } catch (const Error& e) {
      report.skipped.push_back({f, e.what()});
    }
  }
  return report;
}

AuditReport single_feature_audit(const TrainedModel& model, const EncodedDataset& test,
                                 std::span<const std::string> features) {
  const auto yhat = model.predict(test);
  auto report = single_feature_audit(test.target_vector(), yhat, test, features);
  report.provenance.model = model.fingerprint();
  return report;
}

AblationReport ablation_audit(const ModelSpec& spec, const EncodedDataset& train_set, const EncodedDataset& test,
                              std::span<const std::string> sensitive) {
  if (sensitive.empty()) fail(ErrorCode::invalid_request, "ablation needs at least one sensitive feature");
  for (const auto& f : sensitive)
    if (!train_set.sensitive_index(f) || !test.sensitive_index(f))
      fail(ErrorCode::missing_column, "sensitive feature '" + f + "' is not present in the data");

  const auto with_model = train(spec, train_set);
  const auto train_without = train_set.without_features(sensitive);
  const auto test_without = test.without_features(sensitive);
  const auto without_model = train(spec, train_without);

  const auto with = single_feature_audit(with_model, test, sensitive);
  const auto without = single_feature_audit(without_model, test_without, sensitive);

  AblationReport out;
  for (const auto& f : sensitive) {
    const auto* a = with.find(f);
    const auto* b = without.find(f);
    if (a && b) {
      out.records.push_back({f, a->delta_mae, b->delta_mae, std::abs(a->delta_mae - b->delta_mae)});
    } else {
      for (const auto& s : with.skipped)
        if (s.feature == f) out.skipped.push_back(s);
    }
  }
  return out;
}

void write_audit_csv(const AuditReport& report, std::ostream& out) {
  csv::write_record(out, {"feature", "n_low", "n_high", "mae_low", "mae_high", "delta_mae"});
  for (const auto& r : report.records)
    csv::write_record(out, {r.feature, std::to_string(r.n_low), std::to_string(r.n_high), csv::fixed(r.mae_low),
                            csv::fixed(r.mae_high), csv::fixed(r.delta_mae)});
}

void write_audit_markdown(const AuditReport& report, std::ostream& out) {
  out << "| Feature | n Low | n High | MAE Low | MAE High | dMAE |\n";
  out << "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& r : report.records)
    out << "| " << r.feature << " | " << r.n_low << " | " << r.n_high << " | " << csv::fixed(r.mae_low, 2) << " | "
        << csv::fixed(r.mae_high, 2) << " | " << csv::fixed(r.delta_mae, 2) << " |\n";
  for (const auto& s : report.skipped) out << "\nSkipped `" << s.feature << "`: " << s.reason << '\n';
}

}  // namespace fairaudit
