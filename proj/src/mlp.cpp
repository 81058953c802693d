#include <algorithm>
#include <cmath>
#include <limits>

#include "fairaudit/error.hpp"
#include "fairaudit/regressors.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit::learners {

namespace {

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int t = 0;
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;

  Adam(double learning_rate, const MlpParams& p) : lr(learning_rate) {
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      mw.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
      vw.push_back(mw.back());
      mb.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
      vb.push_back(mb.back());
    }
  }

  void step(MlpParams& p, const std::vector<Eigen::MatrixXd>& gw, const std::vector<Eigen::VectorXd>& gb) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      mw[l] = beta1 * mw[l] + (1.0 - beta1) * gw[l];
      vw[l] = beta2 * vw[l] + (1.0 - beta2) * gw[l].cwiseProduct(gw[l]);
      p.weights[l].array() -= lr * (mw[l].array() / c1) / ((vw[l].array() / c2).sqrt() + eps);
      mb[l] = beta1 * mb[l] + (1.0 - beta1) * gb[l];
      vb[l] = beta2 * vb[l] + (1.0 - beta2) * gb[l].cwiseProduct(gb[l]);
      p.biases[l].array() -= lr * (mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + eps);
    }
  }
};

// Forward pass; keeps the pre-activations of every hidden layer.
Eigen::VectorXd forward(const MlpParams& p, const Eigen::MatrixXd& X, std::vector<Eigen::MatrixXd>* acts,
                        std::vector<Eigen::MatrixXd>* pre) {
  Eigen::MatrixXd h = X;
  const std::size_t L = p.weights.size();
  for (std::size_t l = 0; l + 1 < L; ++l) {
    Eigen::MatrixXd z = (h * p.weights[l]).rowwise() + p.biases[l].transpose();
    if (acts) acts->push_back(h);
    h = z.cwiseMax(0.0);
    if (pre) pre->push_back(std::move(z));
  }
  if (acts) acts->push_back(h);
  return (h * p.weights[L - 1]).col(0).array() + p.biases[L - 1](0);
}

double weighted_mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& t, const Eigen::VectorXd& w) {
  return (w.array() * (pred - t).array().square()).sum() / w.sum();
}

}  // namespace

Eigen::VectorXd predict_mlp(const MlpParams& params, const Eigen::MatrixXd& X) {
  return forward(params, X, nullptr, nullptr).array() * params.y_scale + params.y_mean;
}

// Fully connected ReLU network on standardised targets, trained full-batch
// with Adam on weighted MSE. A seeded carve-out of the training rows drives
// early stopping; the best validation weights are restored at the end.
MlpParams fit_mlp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                  const MlpOptions& o, std::uint64_t seed) {
  if (o.hidden_layers < 1 || o.hidden_units < 1) fail(ErrorCode::invalid_argument, "MLP needs hidden units");
  const Eigen::Index n = X.rows(), d = X.cols();
  Rng rng(seed);

  std::vector<std::size_t> perm(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  auto n_val = static_cast<Eigen::Index>(std::ceil(o.validation_fraction * static_cast<double>(n) - 1e-9));
  n_val = std::clamp<Eigen::Index>(n_val, o.validation_fraction > 0.0 ? 1 : 0, n - 1);
  std::vector<std::size_t> val_idx(perm.begin(), perm.begin() + n_val);
  std::vector<std::size_t> fit_idx(perm.begin() + n_val, perm.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(fit_idx.begin(), fit_idx.end());

  auto take = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& Xs, Eigen::VectorXd& ys, Eigen::VectorXd& ws) {
    Xs.resize(static_cast<Eigen::Index>(idx.size()), d);
    ys.resize(static_cast<Eigen::Index>(idx.size()));
    ws.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(idx[k]);
      Xs.row(static_cast<Eigen::Index>(k)) = X.row(i);
      ys(static_cast<Eigen::Index>(k)) = y(i);
      ws(static_cast<Eigen::Index>(k)) = w(i);
    }
  };
  Eigen::MatrixXd Xf, Xv;
  Eigen::VectorXd yf, yv, wf, wv;
  take(fit_idx, Xf, yf, wf);
  take(val_idx, Xv, yv, wv);

  MlpParams p;
  p.y_mean = yf.mean();
  const double var = (yf.array() - p.y_mean).square().mean();
  p.y_scale = var > 0.0 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd tf = (yf.array() - p.y_mean) / p.y_scale;
  const Eigen::VectorXd tv = (yv.array() - p.y_mean) / p.y_scale;

  Eigen::Index fan_in = d;
  for (int l = 0; l <= o.hidden_layers; ++l) {
    const Eigen::Index fan_out = l < o.hidden_layers ? o.hidden_units : 1;
    const double scale = std::sqrt((l < o.hidden_layers ? 2.0 : 1.0) / static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
    Eigen::MatrixXd W(fan_in, fan_out);
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = scale * rng.normal();
    p.weights.push_back(std::move(W));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    fan_in = fan_out;
  }

  Adam adam(o.learning_rate, p);
  const double wsum = wf.sum();
  MlpParams best = p;
  double best_val = std::numeric_limits<double>::infinity();
  int stale = 0;
  const std::size_t L = p.weights.size();
  std::vector<Eigen::MatrixXd> gw(L);
  std::vector<Eigen::VectorXd> gb(L);

  for (int epoch = 1; epoch <= o.max_epochs; ++epoch) {
    std::vector<Eigen::MatrixXd> acts, pre;
    const Eigen::VectorXd out = forward(p, Xf, &acts, &pre);

    Eigen::MatrixXd delta = (2.0 / wsum) * (wf.array() * (out - tf).array()).matrix();
    for (std::size_t l = L; l-- > 0;) {
      gw[l] = acts[l].transpose() * delta;
      gb[l] = delta.colwise().sum().transpose();
      if (l > 0) delta = (delta * p.weights[l].transpose()).cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
    adam.step(p, gw, gb);

    const double val = n_val > 0 ? weighted_mse(forward(p, Xv, nullptr, nullptr), tv, wv)
                                 : weighted_mse(forward(p, Xf, nullptr, nullptr), tf, wf);
    p.epochs_run = epoch;
    if (!std::isfinite(val)) break;
    if (val < best_val * (1.0 - 1e-4)) {
      best_val = val;
      best = p;
      stale = 0;
    } else if (++stale >= o.patience) {
      break;
    }
  }
  best.epochs_run = p.epochs_run;
  return best;
}

}  // namespace fairaudit::learners
