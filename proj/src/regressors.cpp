#include "fairaudit/regressors.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "fairaudit/error.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

namespace {

constexpr int kModelFormatVersion = 1;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

learners::TreeOptions tree_options(const ModelSpec& spec) {
  learners::TreeOptions o;
  o.max_depth = static_cast<int>(spec.param("max_depth"));
  o.min_samples_split = static_cast<std::size_t>(spec.param("min_samples_split"));
  o.min_samples_leaf = static_cast<std::size_t>(spec.param("min_samples_leaf"));
  if (o.min_samples_leaf < 1 || o.min_samples_split < 2)
    fail(ErrorCode::invalid_argument, "min_samples_leaf >= 1 and min_samples_split >= 2 required");
  return o;
}

nlohmann::json tree_to_json(const RegressionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  return nodes;
}

RegressionTree tree_from_json(const nlohmann::json& j) {
  RegressionTree t;
  for (const auto& n : j) t.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(), n.at(4).get<double>()});
  const auto size = static_cast<int>(t.nodes.size());
  if (size == 0) fail(ErrorCode::parse, "tree without nodes");
  for (const auto& n : t.nodes)
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size))
      fail(ErrorCode::parse, "tree node points outside the tree");
  return t;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) fail(ErrorCode::parse, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void hash_tree(Fnv1a& h, const RegressionTree& t) {
  for (const auto& n : t.nodes) {
    h.u64(static_cast<std::uint64_t>(n.feature));
    h.f64(n.threshold);
    h.f64(n.value);
  }
}

std::uint64_t fingerprint_of(const ModelSpec& spec, const std::vector<std::string>& names, const ModelParams& params) {
  Fnv1a h;
  h.str(to_string(spec.kind));
  h.u64(spec.seed);
  for (const auto& [k, v] : spec.hyperparams) {
    h.str(k);
    h.f64(v);
  }
  for (const auto& n : names) h.str(n);
  std::visit(overloaded{
                 [&](const LinearParams& p) {
                   for (Eigen::Index i = 0; i < p.coef.size(); ++i) h.f64(p.coef(i));
                   h.f64(p.intercept);
                 },
                 [&](const TreeParams& p) { hash_tree(h, p.tree); },
                 [&](const ForestParams& p) {
                   for (const auto& t : p.trees) hash_tree(h, t);
                 },
                 [&](const BoostingParams& p) {
                   h.f64(p.base);
                   h.f64(p.learning_rate);
                   for (const auto& t : p.stages) hash_tree(h, t);
                 },
                 [&](const MlpParams& p) {
                   for (const auto& W : p.weights)
                     for (Eigen::Index i = 0; i < W.size(); ++i) h.f64(W.data()[i]);
                   for (const auto& b : p.biases)
                     for (Eigen::Index i = 0; i < b.size(); ++i) h.f64(b(i));
                   h.f64(p.y_mean);
                   h.f64(p.y_scale);
                 },
             },
             params);
  return h.digest();
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear: return "linear";
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::gradient_boosting: return "gradient_boosting";
    case ModelKind::mlp: return "mlp";
  }
  return "linear";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "linear" || name == "lr") return ModelKind::linear;
  if (name == "decision_tree" || name == "dt") return ModelKind::decision_tree;
  if (name == "random_forest" || name == "rf") return ModelKind::random_forest;
  if (name == "gradient_boosting" || name == "gb") return ModelKind::gradient_boosting;
  if (name == "mlp") return ModelKind::mlp;
  fail(ErrorCode::invalid_config, "unknown model kind '" + std::string(name) + "'");
}

std::map<std::string, double> default_hyperparams(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear: return {};
    case ModelKind::decision_tree:
      return {{"max_depth", 10}, {"min_samples_split", 2}, {"min_samples_leaf", 1}};
    case ModelKind::random_forest:
      return {{"n_estimators", 100}, {"max_depth", -1}, {"min_samples_split", 2}, {"min_samples_leaf", 1}};
    case ModelKind::gradient_boosting:
      return {{"n_estimators", 100}, {"learning_rate", 0.1}, {"max_depth", 3}, {"min_samples_split", 2}, {"min_samples_leaf", 1}};
    case ModelKind::mlp:
      return {{"hidden_layers", 2}, {"hidden_units", 64}, {"learning_rate", 0.01},
              {"max_epochs", 2000}, {"patience", 20}, {"validation_fraction", 0.1}};
  }
  return {};
}

double ModelSpec::param(const std::string& name) const {
  if (auto it = hyperparams.find(name); it != hyperparams.end()) return it->second;
  const auto defaults = default_hyperparams(kind);
  if (auto it = defaults.find(name); it != defaults.end()) return it->second;
  fail(ErrorCode::invalid_argument, std::string(to_string(kind)) + " has no hyperparameter '" + name + "'");
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  if (j.is_string()) {
    s.kind = model_kind_from_string(j.get<std::string>());
    return s;
  }
  try {
    s.kind = model_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("hyperparams")) s.hyperparams = j.at("hyperparams").get<std::map<std::string, double>>();
    s.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_config, std::string("model spec: ") + e.what());
  }
  const auto defaults = default_hyperparams(s.kind);
  for (const auto& [k, v] : s.hyperparams)
    if (!defaults.count(k)) fail(ErrorCode::invalid_config, s.label() + " has no hyperparameter '" + k + "'");
  return s;
}

nlohmann::json ModelSpec::to_json() const {
  return {{"kind", std::string(to_string(kind))}, {"hyperparams", hyperparams}, {"seed", seed}};
}

void validate_weights(std::span<const double> weights, std::size_t n) {
  if (weights.size() != n) fail(ErrorCode::length_mismatch, "weights are not aligned with the training set");
  for (double w : weights)
    if (!(w > 0.0 && w <= 1.0)) fail(ErrorCode::invalid_argument, "weights must lie in (0, 1]");
}

// ---------------------------------------------------------------------------

TrainedModel::TrainedModel(ModelSpec spec, std::vector<std::string> feature_names, ModelParams params)
    : spec_(std::move(spec)), feature_names_(std::move(feature_names)), params_(std::move(params)) {
  fingerprint_ = fingerprint_of(spec_, feature_names_, params_);
}

std::vector<double> TrainedModel::predict(const Eigen::MatrixXd& X) const {
  if (X.rows() == 0) return {};
  if (X.cols() != static_cast<Eigen::Index>(feature_names_.size()))
    fail(ErrorCode::dimension_mismatch, "model expects " + std::to_string(feature_names_.size()) + " features, got " +
                                            std::to_string(X.cols()));
  Eigen::VectorXd out = std::visit(
      overloaded{
          [&](const LinearParams& p) -> Eigen::VectorXd { return (X * p.coef).array() + p.intercept; },
          [&](const TreeParams& p) -> Eigen::VectorXd {
            Eigen::VectorXd v(X.rows());
            for (Eigen::Index i = 0; i < X.rows(); ++i) v(i) = p.tree.predict_row(X.row(i));
            return v;
          },
          [&](const ForestParams& p) -> Eigen::VectorXd {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(X.rows());
            for (const auto& t : p.trees)
              for (Eigen::Index i = 0; i < X.rows(); ++i) v(i) += t.predict_row(X.row(i));
            return v / static_cast<double>(p.trees.size());
          },
          [&](const BoostingParams& p) -> Eigen::VectorXd {
            Eigen::VectorXd v = Eigen::VectorXd::Constant(X.rows(), p.base);
            for (const auto& t : p.stages)
              for (Eigen::Index i = 0; i < X.rows(); ++i) v(i) += p.learning_rate * t.predict_row(X.row(i));
            return v;
          },
          [&](const MlpParams& p) -> Eigen::VectorXd { return learners::predict_mlp(p, X); },
      },
      params_);
  if (!out.allFinite()) fail(ErrorCode::internal, "model produced non-finite predictions");
  return to_std(out);
}

std::vector<double> TrainedModel::predict(const EncodedDataset& data) const {
  if (data.feature_names() != feature_names_)
    fail(ErrorCode::dimension_mismatch, "dataset feature order differs from the model's training features");
  return predict(data.matrix());
}

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json params = std::visit(
      overloaded{
          [](const LinearParams& p) -> nlohmann::json { return {{"coef", to_std(p.coef)}, {"intercept", p.intercept}}; },
          [](const TreeParams& p) -> nlohmann::json { return {{"nodes", tree_to_json(p.tree)}}; },
          [](const ForestParams& p) -> nlohmann::json {
            nlohmann::json trees = nlohmann::json::array();
            for (const auto& t : p.trees) trees.push_back(tree_to_json(t));
            return {{"trees", trees}};
          },
          [](const BoostingParams& p) -> nlohmann::json {
            nlohmann::json stages = nlohmann::json::array();
            for (const auto& t : p.stages) stages.push_back(tree_to_json(t));
            return {{"base", p.base}, {"learning_rate", p.learning_rate}, {"stages", stages}};
          },
          [](const MlpParams& p) -> nlohmann::json {
            nlohmann::json layers = nlohmann::json::array();
            for (std::size_t l = 0; l < p.weights.size(); ++l)
              layers.push_back({{"weights", matrix_to_json(p.weights[l])}, {"bias", to_std(p.biases[l])}});
            return {{"layers", layers}, {"y_mean", p.y_mean}, {"y_scale", p.y_scale}, {"epochs_run", p.epochs_run}};
          },
      },
      params_);
  return {{"format", "fairaudit-model"},
          {"version", kModelFormatVersion},
          {"spec", spec_.to_json()},
          {"feature_names", feature_names_},
          {"params", params}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "fairaudit-model") fail(ErrorCode::parse, "not a fairaudit model document");
    if (j.at("version").get<int>() != kModelFormatVersion)
      fail(ErrorCode::parse, "unsupported model version " + j.at("version").dump());
    auto spec = ModelSpec::from_json(j.at("spec"));
    auto names = j.at("feature_names").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    ModelParams params;
    switch (spec.kind) {
      case ModelKind::linear:
        params = LinearParams{vector_from_json(p.at("coef")), p.at("intercept").get<double>()};
        break;
      case ModelKind::decision_tree:
        params = TreeParams{tree_from_json(p.at("nodes"))};
        break;
      case ModelKind::random_forest: {
        ForestParams f;
        for (const auto& t : p.at("trees")) f.trees.push_back(tree_from_json(t));
        params = std::move(f);
        break;
      }
      case ModelKind::gradient_boosting: {
        BoostingParams b;
        b.base = p.at("base").get<double>();
        b.learning_rate = p.at("learning_rate").get<double>();
        for (const auto& t : p.at("stages")) b.stages.push_back(tree_from_json(t));
        params = std::move(b);
        break;
      }
      case ModelKind::mlp: {
        MlpParams m;
        for (const auto& layer : p.at("layers")) {
          m.weights.push_back(matrix_from_json(layer.at("weights")));
          m.biases.push_back(vector_from_json(layer.at("bias")));
        }
        m.y_mean = p.at("y_mean").get<double>();
        m.y_scale = p.at("y_scale").get<double>();
        m.epochs_run = p.value("epochs_run", 0);
        params = std::move(m);
        break;
      }
    }
    return TrainedModel(std::move(spec), std::move(names), std::move(params));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, std::string("model document: ") + e.what());
  }
}

void TrainedModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path);
  out << to_json().dump(1) << '\n';
}

TrainedModel TrainedModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, path + ": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------

ModelParams fit(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  switch (spec.kind) {
    case ModelKind::linear:
      return learners::fit_linear(X, y, w);
    case ModelKind::decision_tree:
      return TreeParams{learners::fit_tree(X, y, w, tree_options(spec))};
    case ModelKind::random_forest:
      return learners::fit_forest(X, y, w, static_cast<int>(spec.param("n_estimators")), tree_options(spec), spec.seed);
    case ModelKind::gradient_boosting:
      return learners::fit_boosting(X, y, w, static_cast<int>(spec.param("n_estimators")), spec.param("learning_rate"),
                                    tree_options(spec));
    case ModelKind::mlp: {
      learners::MlpOptions o;
      o.hidden_layers = static_cast<int>(spec.param("hidden_layers"));
      o.hidden_units = static_cast<int>(spec.param("hidden_units"));
      o.learning_rate = spec.param("learning_rate");
      o.max_epochs = static_cast<int>(spec.param("max_epochs"));
      o.patience = static_cast<int>(spec.param("patience"));
      o.validation_fraction = spec.param("validation_fraction");
      return learners::fit_mlp(X, y, w, o, spec.seed);
    }
  }
  fail(ErrorCode::internal, "unhandled model kind");
}

TrainedModel train(const ModelSpec& spec, const EncodedDataset& data, std::optional<std::span<const double>> weights) {
  if (data.size() < 10) fail(ErrorCode::too_few_samples, "training needs at least 10 samples, got " + std::to_string(data.size()));
  const auto defaults = default_hyperparams(spec.kind);
  for (const auto& [k, v] : spec.hyperparams)
    if (!defaults.count(k)) fail(ErrorCode::invalid_argument, spec.label() + " has no hyperparameter '" + k + "'");

  const Eigen::MatrixXd X = data.matrix();
  const Eigen::VectorXd y = data.targets();
  if (!X.allFinite()) fail(ErrorCode::non_finite_feature, "training features contain non-finite values");
  if (!y.allFinite()) fail(ErrorCode::non_finite_feature, "training targets contain non-finite values");

  Eigen::VectorXd w = Eigen::VectorXd::Ones(y.size());
  if (weights) {
    validate_weights(*weights, data.size());
    w = Eigen::Map<const Eigen::VectorXd>(weights->data(), static_cast<Eigen::Index>(weights->size()));
  }
  return TrainedModel(spec, data.feature_names(), fit(spec, X, y, w));
}

std::vector<double> predict(const TrainedModel& model, const Eigen::MatrixXd& X) { return model.predict(X); }

double mae(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) fail(ErrorCode::length_mismatch, "mae inputs differ in length");
  if (y.empty()) fail(ErrorCode::empty_input, "mae of an empty set");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
  return s / static_cast<double>(y.size());
}

double r2(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) fail(ErrorCode::length_mismatch, "r2 inputs differ in length");
  if (y.size() < 2) fail(ErrorCode::too_few_samples, "r2 needs at least two samples");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (!(ss_tot > 0.0)) fail(ErrorCode::constant_target, "r2 undefined for a constant target");
  return 1.0 - ss_res / ss_tot;
}

}  // namespace fairaudit
