#pragma once

#include "flowtune/dataset.hpp"
#include "flowtune/pipeline.hpp"

namespace flowtune {

enum class LearnerKind { DecisionTree, RandomForest, LinearSvm, Mlp };

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& s);

/// A learner with its finite hyperparameter space and default configuration.
/// The built-in grids are declared stand-ins sized to match the experiment
/// protocol; they are reported as non-canonical in run outputs.
struct LearnerSpec {
  LearnerKind kind;
  ConfigSpace space;
  Configuration default_config;
};

LearnerSpec make_learner_spec(LearnerKind kind);
LearnerSpec make_learner_spec(LearnerKind kind, ConfigSpace space, Configuration default_config);

namespace detail {
struct ModelImpl {
  virtual ~ModelImpl() = default;
  virtual Labels predict(const Matrix& x) const = 0;
  virtual std::size_t input_cols() const = 0;  // 0 = any
};
}  // namespace detail

class TrainedModel {
 public:
  TrainedModel() = default;
  explicit TrainedModel(std::shared_ptr<const detail::ModelImpl> impl) : impl_(std::move(impl)) {}

  /// One label per row; throws std::invalid_argument on a column mismatch.
  Labels predict(const Matrix& x) const;

 private:
  std::shared_ptr<const detail::ModelImpl> impl_;
};

// Direct constructors, used for fixtures and degenerate cases.
TrainedModel make_constant_model(int label);
/// Per-class linear scores: label = argmax_c (weights.row(c) . x + biases(c)),
/// ties resolved toward the lower class id.
TrainedModel make_linear_model(Matrix class_weights, Eigen::VectorXd biases);
/// One hidden ReLU layer followed by a linear output layer.
TrainedModel make_mlp_model(Matrix w1, Eigen::VectorXd b1, Matrix w2, Eigen::VectorXd b2);

struct TreeParams {
  int max_depth = 0;  // 0 = unbounded
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  double max_features_frac = 1.0;
};

struct ForestParams {
  int n_estimators = 25;
  TreeParams tree;
  bool bootstrap = true;
};

struct SvmParams {
  double c = 1.0;
  int epochs = 100;
  double lr0 = 0.1;
  bool fit_intercept = true;
  bool averaged = true;
};

struct MlpParams {
  int hidden = 32;
  double lr = 0.03;
  int epochs = 50;
  int batch = 32;
  double l2 = 0.0;
  double momentum = 0.9;
};

TrainedModel train_decision_tree(const Matrix& x, const Labels& y, const TreeParams& p, Rng& rng);
TrainedModel train_random_forest(const Matrix& x, const Labels& y, const ForestParams& p, Rng& rng);
TrainedModel train_linear_svm(const Matrix& x, const Labels& y, const SvmParams& p, Rng& rng);
TrainedModel train_mlp(const Matrix& x, const Labels& y, const MlpParams& p, Rng& rng);

/// Trains `spec.kind` with the grid point `config`. Deterministic given the
/// generator state; single-class data yields a constant predictor.
TrainedModel train(const LearnerSpec& spec, const Configuration& config, const Matrix& x,
                   const Labels& y, Rng& rng);

double accuracy(const Labels& predicted, const Labels& truth);

/// Stratified fold assignment: per-class shuffled round-robin, so each fold's
/// class proportions deviate from the global ones by at most one sample.
/// Throws when any class has fewer than k members.
std::vector<int> stratified_folds(const Labels& y, int k, std::uint64_t seed);

/// One cross-validated evaluation. `loss` is 1 - mean accuracy, or +infinity
/// when the pipeline was incompatible on any fold (`incompatibility` then
/// carries the cause).
struct Evaluation {
  double loss = std::numeric_limits<double>::infinity();
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracies;
  std::string incompatibility;
  double wall_seconds = 0.0;

  bool incompatible() const { return !incompatibility.empty(); }
};

/// Stratified k-fold evaluation of (pipeline, learner configuration) on a
/// dataset. Each fold re-fits the pipeline on its training part only; the
/// validation part is transformed with the fitted functors.
Evaluation cross_val_score(const PipelineInstance& pipe, const OperatorCatalog& catalog,
                           const LearnerSpec& spec, const Configuration& algo_config,
                           const Dataset& dataset, int k, std::uint64_t seed);

/// Algorithm-only k-fold evaluation on an already-transformed matrix.
Evaluation cross_val_algo(const Matrix& x, const Labels& y, const LearnerSpec& spec,
                          const Configuration& algo_config, int k, std::uint64_t seed);

}  // namespace flowtune
