#include "fairaudit/drift.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "json.hpp"

#include "fairaudit/csv.hpp"
#include "fairaudit/error.hpp"

namespace fairaudit {

std::string KernelSpec::describe() const {
  if (!bandwidth) return "rbf(bandwidth=median-heuristic)";
  char buf[64];
  std::snprintf(buf, sizeof buf, "rbf(bandwidth=%.6g)", *bandwidth);
  return buf;
}

namespace {

void check_cohorts(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) fail(ErrorCode::dimension_mismatch, "cohorts have different column counts");
  if (a.rows() < 2 || b.rows() < 2) fail(ErrorCode::too_few_samples, "each cohort needs at least two rows");
}

}  // namespace

double median_heuristic(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd pooled(a.rows() + b.rows(), a.cols());
  pooled << a, b;
  const Eigen::Index n = pooled.rows();
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((pooled.row(i) - pooled.row(j)).norm());
  if (d.empty()) return 1.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), mid));
  return med > 0.0 ? med : 1.0;
}

MmdResult mmd_detail(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelSpec& kernel) {
  check_cohorts(a, b);
  if (kernel.bandwidth && !(*kernel.bandwidth > 0.0)) fail(ErrorCode::invalid_argument, "kernel bandwidth must be positive");
  const double sigma = kernel.bandwidth ? *kernel.bandwidth : median_heuristic(a, b);
  const double gamma = 1.0 / (2.0 * sigma * sigma);

  // Off-diagonal (or full) kernel sum between the rows of two matrices.
  auto kernel_sum = [gamma](const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, bool same) {
    const Eigen::VectorXd pn = p.rowwise().squaredNorm();
    const Eigen::VectorXd qn = q.rowwise().squaredNorm();
    const Eigen::MatrixXd cross = p * q.transpose();
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < q.rows(); ++j) {
        if (same && i == j) continue;
        const double d2 = std::max(0.0, pn(i) + qn(j) - 2.0 * cross(i, j));
        s += std::exp(-gamma * d2);
      }
    return s;
  };

  const double m = static_cast<double>(a.rows()), n = static_cast<double>(b.rows());
  const double mmd2 = kernel_sum(a, a, true) / (m * (m - 1.0)) + kernel_sum(b, b, true) / (n * (n - 1.0)) -
                      2.0 * kernel_sum(a, b, false) / (m * n);
  return {std::sqrt(std::max(0.0, mmd2)), mmd2, sigma};
}

double mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelSpec& kernel) {
  return mmd_detail(a, b, kernel).mmd;
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  double q;
  if (lambda < 1.18) {
    // Theta-function form converges fast for small lambda.
    const double c = -pi * pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k < 50; ++k) {
      const double t = std::exp(c * (2.0 * k - 1.0) * (2.0 * k - 1.0));
      s += t;
      if (t < 1e-17 * s) break;
    }
    q = 1.0 - std::sqrt(2.0 * pi) / lambda * s;
  } else {
    double s = 0.0;
    for (int k = 1; k < 100; ++k) {
      const double t = std::exp(-2.0 * k * k * lambda * lambda);
      s += (k % 2 ? t : -t);
      if (t < 1e-17) break;
    }
    q = 2.0 * s;
  }
  return std::clamp(q, std::numeric_limits<double>::min(), 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) fail(ErrorCode::too_few_samples, "KS test needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  const double en = std::sqrt(n1 * n2 / (n1 + n2));
  return {d, kolmogorov_survival((en + 0.12 + 0.11 / en) * d)};
}

std::vector<FeatureShift> per_feature_shift(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                            std::span<const std::string> names, double alpha) {
  check_cohorts(a, b);
  if (static_cast<Eigen::Index>(names.size()) != a.cols())
    fail(ErrorCode::dimension_mismatch, "feature names do not match the column count");
  std::vector<FeatureShift> out;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const Eigen::VectorXd ca = a.col(c), cb = b.col(c);
    const auto r = ks_two_sample({ca.data(), static_cast<std::size_t>(ca.size())},
                                 {cb.data(), static_cast<std::size_t>(cb.size())});
    out.push_back({names[static_cast<std::size_t>(c)], r.statistic, r.p_value, r.p_value < alpha});
  }
  return out;
}

Projection project_2d(const Eigen::MatrixXd& X) {
  if (X.rows() < 3) fail(ErrorCode::too_few_samples, "projection needs at least three rows");
  if (X.cols() < 2) fail(ErrorCode::dimension_mismatch, "projection needs at least two columns");
  const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) fail(ErrorCode::internal, "eigen decomposition failed");
  const Eigen::Index d = X.cols();
  Projection p;
  p.axes.resize(d, 2);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd v = es.eigenvectors().col(d - 1 - k);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    p.axes.col(k) = v;
    p.explained_variance[static_cast<std::size_t>(k)] = std::max(0.0, es.eigenvalues()(d - 1 - k));
  }
  p.coords = centered * p.axes;
  return p;
}

nlohmann::json DriftReport::to_json() const {
  nlohmann::json pf = nlohmann::json::array();
  for (const auto& f : per_feature)
    pf.push_back({{"feature", f.feature}, {"statistic", f.statistic}, {"p_value", f.p_value}, {"significant", f.significant}});
  return {{"cohort_a", cohort_a}, {"cohort_b", cohort_b}, {"n_a", n_a}, {"n_b", n_b}, {"mmd", mmd},
          {"kernel", kernel}, {"test", "two-sample Kolmogorov-Smirnov, asymptotic p-value, alpha 0.05"},
          {"columns_tested", columns_tested}, {"fraction_significant", fraction_significant}, {"per_feature", pf}};
}

DriftReport drift_report(const EncodedDataset& data, std::span<const int> cohort_a, std::span<const int> cohort_b,
                         const KernelSpec& kernel) {
  if (cohort_a.empty() || cohort_b.empty()) fail(ErrorCode::invalid_request, "both cohorts need at least one year");
  auto rows_of = [&](std::span<const int> years) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (std::find(years.begin(), years.end(), data.samples[i].year) != years.end()) idx.push_back(i);
    return idx;
  };
  const auto ia = rows_of(cohort_a), ib = rows_of(cohort_b);
  const Eigen::MatrixXd a = data.subset(ia).matrix(), b = data.subset(ib).matrix();

  DriftReport r;
  r.cohort_a.assign(cohort_a.begin(), cohort_a.end());
  r.cohort_b.assign(cohort_b.begin(), cohort_b.end());
  r.n_a = ia.size();
  r.n_b = ib.size();
  const auto m = mmd_detail(a, b, kernel);
  r.mmd = m.mmd;
  char buf[96];
  std::snprintf(buf, sizeof buf, "rbf(bandwidth=%.6g%s)", m.bandwidth, kernel.bandwidth ? "" : ", median heuristic");
  r.kernel = buf;

  std::vector<Eigen::Index> numeric;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < data.encoder.features.size(); ++j)
    if (data.encoder.features[j].type == FeatureType::numeric) {
      numeric.push_back(static_cast<Eigen::Index>(j));
      names.push_back(data.encoder.features[j].name);
    }
  r.columns_tested = "encoded numeric columns (" + std::to_string(numeric.size()) + " of " +
                     std::to_string(data.num_features()) + "; one-hot columns excluded)";
  if (!numeric.empty()) {
    r.per_feature = per_feature_shift(a(Eigen::all, numeric), b(Eigen::all, numeric), names);
    const auto sig = std::count_if(r.per_feature.begin(), r.per_feature.end(), [](const FeatureShift& f) { return f.significant; });
    r.fraction_significant = static_cast<double>(sig) / static_cast<double>(r.per_feature.size());
  }
  return r;
}

void write_projection_csv(const EncodedDataset& data, const Projection& projection, std::ostream& out) {
  if (projection.coords.rows() != static_cast<Eigen::Index>(data.size()))
    fail(ErrorCode::length_mismatch, "projection does not match the dataset");
  csv::write_record(out, {"ward", "year", "pc1", "pc2"});
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    csv::write_record(out, {data.samples[i].ward, std::to_string(data.samples[i].year), csv::fixed(projection.coords(r, 0), 9),
                            csv::fixed(projection.coords(r, 1), 9)});
  }
}

}  // namespace fairaudit
