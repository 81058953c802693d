// CART regression trees and the two ensembles built on them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "fairaudit/error.hpp"
#include "fairaudit/regressors.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    node = row(n.feature) <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t RegressionTree::leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

namespace learners {

namespace {

// Grows one tree depth-first. Every feature keeps its own ordering of the
// rows; a node owns the same [begin, end) window in each ordering, and
// splitting stably partitions those windows, so sorting happens once per tree.
class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w, const TreeOptions& opts)
      : X_(X), y_(y), w_(w), opts_(opts) {
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (w(i) > 0.0) members_.push_back(static_cast<std::uint32_t>(i));
    if (members_.empty()) fail(ErrorCode::too_few_samples, "tree has no rows with positive weight");

    const auto d = static_cast<std::size_t>(X.cols());
    order_.resize(d);
    for (std::size_t f = 0; f < d; ++f) {
      auto& ord = order_[f];
      ord = members_;
      std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
        return X_(a, static_cast<Eigen::Index>(f)) < X_(b, static_cast<Eigen::Index>(f));
      });
    }
    goes_left_.assign(static_cast<std::size_t>(X.rows()), 0);
    scratch_.resize(members_.size());
  }

  RegressionTree build() {
    grow(0, members_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
  };

  int grow(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    double W = 0.0, S = 0.0;
    double y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
    for (std::size_t p = begin; p < end; ++p) {
      const auto i = members_[p];
      W += w_(i);
      S += w_(i) * y_(i);
      y_min = std::min(y_min, y_(i));
      y_max = std::max(y_max, y_(i));
    }
    tree_.nodes[static_cast<std::size_t>(id)].value = S / W;

    const std::size_t count = end - begin;
    const bool depth_ok = opts_.max_depth < 0 || depth < opts_.max_depth;
    if (!depth_ok || count < opts_.min_samples_split || count < 2 * opts_.min_samples_leaf || y_min == y_max) return id;

    const Split best = find_split(begin, end, W, S);
    if (best.feature < 0) return id;

    const auto f = static_cast<Eigen::Index>(best.feature);
    std::size_t n_left = 0;
    for (std::size_t p = begin; p < end; ++p) {
      const auto i = members_[p];
      goes_left_[i] = X_(i, f) <= best.threshold;
      n_left += goes_left_[i];
    }
    partition(members_, begin, end);
    for (auto& ord : order_) partition(ord, begin, end);

    const int left = grow(begin, begin + n_left, depth + 1);
    const int right = grow(begin + n_left, end, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  // Maximises S_L^2/W_L + S_R^2/W_R, the weighted squared-error reduction up
  // to a constant. Ties keep the lowest feature index, then the lowest threshold.
  Split find_split(std::size_t begin, std::size_t end, double W, double S) const {
    Split best;
    const double parent = S * S / W;
    const std::size_t count = end - begin;
    for (std::size_t f = 0; f < order_.size(); ++f) {
      const auto& ord = order_[f];
      const auto fi = static_cast<Eigen::Index>(f);
      double wl = 0.0, sl = 0.0;
      for (std::size_t p = begin; p + 1 < end; ++p) {
        const auto i = ord[p];
        wl += w_(i);
        sl += w_(i) * y_(i);
        const std::size_t n_left = p - begin + 1;
        const double a = X_(i, fi);
        const double b = X_(ord[p + 1], fi);
        if (!(a < b)) continue;
        if (n_left < opts_.min_samples_leaf || count - n_left < opts_.min_samples_leaf) continue;
        const double wr = W - wl;
        const double sr = S - sl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double gain = sl * sl / wl + sr * sr / wr - parent;
        const double tol = 1e-12 * std::max(1.0, std::abs(best.gain));
        if (best.feature < 0 || gain > best.gain + tol) {
          double mid = 0.5 * (a + b);
          if (!(mid < b)) mid = a;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  void partition(std::vector<std::uint32_t>& v, std::size_t begin, std::size_t end) {
    std::size_t l = begin, r = 0;
    for (std::size_t p = begin; p < end; ++p) {
      if (goes_left_[v[p]]) v[l++] = v[p];
      else scratch_[r++] = v[p];
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r), v.begin() + static_cast<std::ptrdiff_t>(l));
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  const Eigen::VectorXd& w_;
  TreeOptions opts_;
  std::vector<std::uint32_t> members_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<char> goes_left_;
  std::vector<std::uint32_t> scratch_;
  RegressionTree tree_;
};

Eigen::VectorXd predict_tree(const RegressionTree& tree, const Eigen::MatrixXd& X) {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = tree.predict_row(X.row(i));
  return out;
}

}  // namespace

RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        const TreeOptions& options) {
  if (X.rows() != y.size() || y.size() != w.size()) fail(ErrorCode::length_mismatch, "tree inputs disagree in length");
  return TreeBuilder(X, y, w, options).build();
}

ForestParams fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        int n_estimators, const TreeOptions& options, std::uint64_t seed) {
  if (n_estimators < 1) fail(ErrorCode::invalid_argument, "random forest needs at least one tree");
  ForestParams forest;
  forest.trees.reserve(static_cast<std::size_t>(n_estimators));
  const auto n = static_cast<std::uint64_t>(X.rows());
  Eigen::VectorXd boot(X.rows());
  for (int t = 0; t < n_estimators; ++t) {
    Rng rng(derive_seed(seed, {"bootstrap"}, static_cast<std::uint64_t>(t)));
    boot.setZero();
    for (std::uint64_t k = 0; k < n; ++k) boot(static_cast<Eigen::Index>(rng.below(n))) += 1.0;
    forest.trees.push_back(fit_tree(X, y, boot.cwiseProduct(w), options));
  }
  return forest;
}

BoostingParams fit_boosting(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                            int n_estimators, double learning_rate, const TreeOptions& options) {
  if (n_estimators < 0) fail(ErrorCode::invalid_argument, "negative boosting stage count");
  BoostingParams model;
  model.learning_rate = learning_rate;
  model.base = w.dot(y) / w.sum();
  Eigen::VectorXd F = Eigen::VectorXd::Constant(y.size(), model.base);
  for (int m = 0; m < n_estimators; ++m) {
    const Eigen::VectorXd residual = y - F;
    model.stages.push_back(fit_tree(X, residual, w, options));
    F += learning_rate * predict_tree(model.stages.back(), X);
  }
  return model;
}

}  // namespace learners

}  // namespace fairaudit
