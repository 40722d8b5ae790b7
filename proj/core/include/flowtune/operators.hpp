#pragma once

#include <memory>
#include <optional>
#include <string>

#include "flowtune/configspace.hpp"
#include "flowtune/dataset.hpp"
#include "flowtune/rng.hpp"

namespace flowtune {

/// Raised when an operator cannot run on the data it was handed (k larger
/// than the column count, a singleton minority class, ...). Callers map it to
/// an infinite loss rather than aborting the search.
struct RuntimeIncompatibility : std::runtime_error {
  RuntimeIncompatibility(std::string node_id, std::string cause_text)
      : std::runtime_error(node_id.empty() ? cause_text : node_id + ": " + cause_text),
        node(std::move(node_id)),
        cause(std::move(cause_text)) {}
  std::string node;
  std::string cause;
};

namespace detail {
struct FunctorImpl {
  virtual ~FunctorImpl() = default;
  virtual Matrix transform(const Matrix& x) const = 0;
  virtual std::size_t input_cols() const = 0;
};
}  // namespace detail

/// Per-sample transformation produced by fitting an operator on the training
/// set. Default-constructed functors are the identity (the rebalancing case).
class FittedFunctor {
 public:
  FittedFunctor() = default;
  FittedFunctor(std::string kind, std::shared_ptr<const detail::FunctorImpl> impl)
      : kind_(std::move(kind)), impl_(std::move(impl)) {}

  bool is_identity() const { return impl_ == nullptr; }
  const std::string& kind() const { return kind_; }

  /// Applies the fitted transformation; throws std::invalid_argument on a
  /// column-count mismatch. Identity functors pass the input through.
  Matrix transform(const Matrix& x) const;

 private:
  std::string kind_ = "identity";
  std::shared_ptr<const detail::FunctorImpl> impl_;
};

struct QuantileRange {
  double lower = 25.0;
  double upper = 75.0;
};

/// Linear-interpolation quantile of an unsorted sample, q in [0,100].
double quantile(std::vector<double> values, double q);

// --- Normalization operators ---------------------------------------------

FittedFunctor standard_scaler_fit(const Matrix& x, bool with_mean, bool with_std);
FittedFunctor robust_scaler_fit(const Matrix& x, bool with_centering, bool with_scaling,
                                QuantileRange range);
FittedFunctor minmax_fit(const Matrix& x);
FittedFunctor power_transform_fit(const Matrix& x);

/// Yeo-Johnson transform of one value for a given exponent.
double yeo_johnson(double x, double lambda);

// --- Feature operators -----------------------------------------------------

/// One-way ANOVA F statistic of a single feature column against the class
/// labels. Perfect separation (zero within-group variance with nonzero
/// between-group variance) returns +infinity.
double f_score(const Eigen::VectorXd& column, const Labels& y);

FittedFunctor select_k_best_fit(const Matrix& x, const Labels& y, std::size_t k);

struct PcaModel {
  FittedFunctor functor;
  Eigen::VectorXd mean;
  Matrix components;                  // k x d, orthonormal rows
  Eigen::VectorXd explained_variance; // non-increasing
};

PcaModel pca_fit(const Matrix& x, std::size_t k);

// --- Rebalancing operators (train-only; their functor is the identity) -----

struct Resampled {
  Matrix features;
  Labels labels;
};

Resampled smote_fit(const Matrix& x, const Labels& y, std::size_t k_neighbors, Rng& rng);
Resampled nearmiss_fit(const Matrix& x, const Labels& y, int version, Rng& rng);
Resampled cnn_fit(const Matrix& x, const Labels& y, std::size_t n_neighbors, Rng& rng);

// --- Catalog ----------------------------------------------------------------

/// What an operator does to the training data: possibly resampled rows, the
/// transformed features, and the functor to replay on unseen data.
struct FitResult {
  Matrix features;
  Labels labels;
  FittedFunctor functor;
};

enum class DataKindTag { NumericMatrix, LabeledNumericMatrix, MixedTable, ClassVector };

struct DataKind {
  DataKindTag tag = DataKindTag::NumericMatrix;
  std::optional<std::pair<std::size_t, std::size_t>> column_range;  // (min, max)
  friend bool operator==(const DataKind&, const DataKind&) = default;
};

std::string to_string(DataKindTag tag);

/// Representation-space compatibility between a producer and a consumer.
inline bool kinds_compatible(const DataKind& upstream_out, const DataKind& downstream_in) {
  return upstream_out.tag == downstream_in.tag;
}

struct OperatorSignature {
  std::string name;
  DataKind input;
  DataKind output;
  ConfigSpace params;
  bool train_only = false;
};

class OperatorDef {
 public:
  using FitFn = FitResult (*)(const Matrix&, const Labels&, const ConfigSpace&,
                              const Configuration&, Rng&);

  OperatorDef() = default;
  OperatorDef(OperatorSignature sig, FitFn fit) : signature_(std::move(sig)), fit_(fit) {}

  const OperatorSignature& signature() const { return signature_; }
  const std::string& name() const { return signature_.name; }

  /// Size of the parameter grid as reported in catalog listings: 0 for a
  /// parameter-free operator, the product of grid sizes otherwise.
  std::uint64_t param_cardinality() const {
    return signature_.params.dim_count() == 0 ? 0 : signature_.params.cardinality();
  }

  FitResult fit(const Matrix& x, const Labels& y, const Configuration& params, Rng& rng) const {
    return fit_(x, y, signature_.params, params, rng);
  }

 private:
  OperatorSignature signature_;
  FitFn fit_ = nullptr;
};

class OperatorCatalog {
 public:
  void add(OperatorDef def);
  const OperatorDef& get(const std::string& name) const;
  const OperatorDef* find(const std::string& name) const;
  const std::vector<OperatorDef>& entries() const { return entries_; }

 private:
  std::vector<OperatorDef> entries_;
};

/// The built-in operator catalog: three rebalancers, four scalers, and three
/// feature operators (PCA, F-score selection, and their column-stacked
/// combination). Feature counts are grid fractions of the column count,
/// rounded up at fit time.
OperatorCatalog default_catalog();

std::size_t resolve_fraction_k(double fraction, std::size_t columns);

}  // namespace flowtune
