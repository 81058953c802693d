#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "fairaudit/dataset.hpp"

namespace fairaudit {

/// RBF kernel exp(-|a - b|^2 / (2 bandwidth^2)). Without an explicit
/// bandwidth the median pairwise distance of the pooled sample is used.
struct KernelSpec {
  std::optional<double> bandwidth;

  std::string describe() const;
};

double median_heuristic(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct MmdResult {
  double mmd = 0.0;       // sqrt(max(0, MMD^2_u))
  double mmd2_unbiased = 0.0;
  double bandwidth = 0.0;
};

MmdResult mmd_detail(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelSpec& kernel = {});
double mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelSpec& kernel = {});

/// Survival function of the Kolmogorov distribution,
/// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov with the asymptotic p-value.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct FeatureShift {
  std::string feature;
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

std::vector<FeatureShift> per_feature_shift(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                            std::span<const std::string> names, double alpha = 0.05);

struct Projection {
  Eigen::MatrixXd coords;  // n x 2
  Eigen::MatrixXd axes;    // d x 2, orthonormal columns
  std::array<double, 2> explained_variance{};
};

/// PCA onto the top two principal components. Signs are fixed so the
/// largest-magnitude loading of each axis is positive.
Projection project_2d(const Eigen::MatrixXd& X);

struct DriftReport {
  std::vector<int> cohort_a;
  std::vector<int> cohort_b;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double mmd = 0.0;
  std::string kernel;
  std::vector<FeatureShift> per_feature;
  double fraction_significant = 0.0;
  std::string columns_tested;

  nlohmann::json to_json() const;
};

/// MMD over all encoded features; KS over the encoded numeric (non one-hot) columns.
DriftReport drift_report(const EncodedDataset& data, std::span<const int> cohort_a, std::span<const int> cohort_b,
                         const KernelSpec& kernel = {});

/// `ward, year, pc1, pc2` rows for every sample.
void write_projection_csv(const EncodedDataset& data, const Projection& projection, std::ostream& out);

}  // namespace fairaudit
