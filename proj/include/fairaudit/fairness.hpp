#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairaudit/dataset.hpp"
#include "fairaudit/regressors.hpp"

namespace fairaudit {

/// Identifies the (model, test set) pair an audit was computed on.
struct AuditProvenance {
  std::uint64_t model = 0;
  std::uint64_t test = 0;

  bool operator==(const AuditProvenance&) const = default;
};

/// Midpoint (max + min) / 2 of a continuous sensitive feature.
double threshold(std::span<const double> values);

/// Fills data.thresholds for every sensitive feature with at least two
/// distinct values. Degenerate features are left out and later reported as
/// skipped by the audits.
void attach_thresholds(EncodedDataset& data);

struct GroupAssignment {
  std::string feature;
  double threshold = 0.0;
  std::vector<std::size_t> low;   // x < T
  std::vector<std::size_t> high;  // x >= T

  std::size_t size() const { return low.size() + high.size(); }
  /// Per-sample membership: true for High.
  std::vector<bool> high_mask() const;
};

GroupAssignment assign_groups(std::span<const double> values, const std::string& feature, double T);
GroupAssignment assign_groups(const EncodedDataset& data, const std::string& feature, double T);
/// Uses the threshold stored on `data`.
GroupAssignment assign_groups(const EncodedDataset& data, const std::string& feature);

struct DisparityRecord {
  std::string feature;
  double mae_low = 0.0;
  double mae_high = 0.0;
  double delta_mae = 0.0;
  std::size_t n_low = 0;
  std::size_t n_high = 0;
};

DisparityRecord make_disparity(std::string feature, double mae_low, double mae_high, std::size_t n_low,
                               std::size_t n_high);

/// Group MAEs of precomputed predictions.
DisparityRecord delta_mae(std::span<const double> y, std::span<const double> yhat, const GroupAssignment& groups);
DisparityRecord delta_mae(const TrainedModel& model, const EncodedDataset& test, const GroupAssignment& groups);

struct SkippedFeature {
  std::string feature;
  std::string reason;
};

struct AuditReport {
  std::vector<DisparityRecord> records;
  std::vector<SkippedFeature> skipped;
  AuditProvenance provenance;

  const DisparityRecord* find(std::string_view feature) const;
  nlohmann::json to_json() const;
};

AuditReport single_feature_audit(const TrainedModel& model, const EncodedDataset& test,
                                 std::span<const std::string> features);
AuditReport single_feature_audit(std::span<const double> y, std::span<const double> yhat,
                                 const EncodedDataset& test, std::span<const std::string> features);

struct AblationRecord {
  std::string feature;
  double delta_with = 0.0;
  double delta_without = 0.0;
  double abs_diff = 0.0;
};

struct AblationReport {
  std::vector<AblationRecord> records;
  std::vector<SkippedFeature> skipped;
};

/// Trains `spec` twice, with and without the sensitive input columns, and
/// audits both models against the same metadata-derived groups.
AblationReport ablation_audit(const ModelSpec& spec, const EncodedDataset& train, const EncodedDataset& test,
                              std::span<const std::string> sensitive);

void write_audit_csv(const AuditReport& report, std::ostream& out);
void write_audit_markdown(const AuditReport& report, std::ostream& out);

}  // namespace fairaudit
