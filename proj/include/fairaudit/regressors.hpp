#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "fairaudit/dataset.hpp"

namespace fairaudit {

enum class ModelKind { linear, decision_tree, random_forest, gradient_boosting, mlp };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

/// Model family plus hyperparameters. Unset hyperparameters fall back to the
/// family defaults returned by default_hyperparams().
///
/// Tree families: max_depth (negative = unlimited), min_samples_split,
/// min_samples_leaf, n_estimators, learning_rate.
/// MLP: hidden_layers, hidden_units, learning_rate, max_epochs, patience,
/// validation_fraction.
struct ModelSpec {
  ModelKind kind = ModelKind::linear;
  std::map<std::string, double> hyperparams;
  std::uint64_t seed = 0;

  double param(const std::string& name) const;
  std::string label() const { return std::string(to_string(kind)); }

  static ModelSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

std::map<std::string, double> default_hyperparams(ModelKind kind);

/// Per-sample weights in (0, 1], aligned with a training set.
using WeightVector = std::vector<double>;

void validate_weights(std::span<const double> weights, std::size_t n);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  int depth() const;
  std::size_t leaves() const;
};

struct LinearParams {
  Eigen::VectorXd coef;
  double intercept = 0.0;
};

struct TreeParams {
  RegressionTree tree;
};

struct ForestParams {
  std::vector<RegressionTree> trees;
};

struct BoostingParams {
  double base = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> stages;
};

struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;  // layer l maps width(l) -> width(l+1)
  std::vector<Eigen::VectorXd> biases;
  double y_mean = 0.0;
  double y_scale = 1.0;
  int epochs_run = 0;
};

using ModelParams = std::variant<LinearParams, TreeParams, ForestParams, BoostingParams, MlpParams>;

class TrainedModel {
 public:
  TrainedModel(ModelSpec spec, std::vector<std::string> feature_names, ModelParams params);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const ModelParams& params() const { return params_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  std::vector<double> predict(const Eigen::MatrixXd& X) const;
  std::vector<double> predict(const EncodedDataset& data) const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static TrainedModel load(const std::string& path);

 private:
  ModelSpec spec_;
  std::vector<std::string> feature_names_;
  ModelParams params_;
  std::uint64_t fingerprint_ = 0;
};

TrainedModel train(const ModelSpec& spec, const EncodedDataset& data,
                   std::optional<std::span<const double>> weights = std::nullopt);

/// Matrix-level entry point used by train(); feature names are attached by the caller.
ModelParams fit(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const Eigen::VectorXd& w);

std::vector<double> predict(const TrainedModel& model, const Eigen::MatrixXd& X);

double mae(std::span<const double> y, std::span<const double> yhat);
double r2(std::span<const double> y, std::span<const double> yhat);

// Individual learners, exposed for tests.
namespace learners {

struct TreeOptions {
  int max_depth = -1;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
};

/// CART regression tree on weighted squared error. `w` doubles as bootstrap
/// multiplicity: rows with weight 0 are excluded.
RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        const TreeOptions& options);

LinearParams fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w);
ForestParams fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        int n_estimators, const TreeOptions& options, std::uint64_t seed);
BoostingParams fit_boosting(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                            int n_estimators, double learning_rate, const TreeOptions& options);

struct MlpOptions {
  int hidden_layers = 2;
  int hidden_units = 64;
  double learning_rate = 0.01;
  int max_epochs = 2000;
  int patience = 20;
  double validation_fraction = 0.1;
};

MlpParams fit_mlp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                  const MlpOptions& options, std::uint64_t seed);

Eigen::VectorXd predict_mlp(const MlpParams& params, const Eigen::MatrixXd& X);

}  // namespace learners

}  // namespace fairaudit
