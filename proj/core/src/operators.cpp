#include "flowtune/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace flowtune {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_cols(const detail::FunctorImpl& impl, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != impl.input_cols())
    throw std::invalid_argument("functor expects " + std::to_string(impl.input_cols()) +
                                " columns, got " + std::to_string(x.cols()));
}

// Per-column (x - center) / scale. Covers the standard, robust and min-max
// scalers; they differ only in the fitted statistics.
struct ColumnAffineFn final : detail::FunctorImpl {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;

  Matrix transform(const Matrix& x) const override {
    require_cols(*this, x);
    Matrix out = x;
    out.rowwise() -= center.transpose();
    out.array().rowwise() /= scale.transpose().array();
    return out;
  }
  std::size_t input_cols() const override { return static_cast<std::size_t>(center.size()); }
};

struct PowerFn final : detail::FunctorImpl {
  Eigen::VectorXd lambdas;
  Eigen::VectorXd post_mean;
  Eigen::VectorXd post_std;

  Matrix transform(const Matrix& x) const override {
    require_cols(*this, x);
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        out(r, c) = (yeo_johnson(x(r, c), lambdas(c)) - post_mean(c)) / post_std(c);
    return out;
  }
  std::size_t input_cols() const override { return static_cast<std::size_t>(lambdas.size()); }
};

struct PcaFn final : detail::FunctorImpl {
  Eigen::VectorXd mean;
  Matrix components;  // k x d

  Matrix transform(const Matrix& x) const override {
    require_cols(*this, x);
    return (x.rowwise() - mean.transpose()) * components.transpose();
  }
  std::size_t input_cols() const override { return static_cast<std::size_t>(mean.size()); }
};

struct SelectFn final : detail::FunctorImpl {
  std::vector<std::size_t> indices;  // sorted ascending
  std::size_t cols = 0;

  Matrix transform(const Matrix& x) const override {
    require_cols(*this, x);
    Matrix out(x.rows(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i)
      out.col(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(indices[i]));
    return out;
  }
  std::size_t input_cols() const override { return cols; }
};

// Runs each branch functor on the same input and stacks the outputs
// column-wise, in branch declaration order.
struct StackFn final : detail::FunctorImpl {
  std::vector<FittedFunctor> branches;
  std::size_t cols = 0;

  Matrix transform(const Matrix& x) const override {
    require_cols(*this, x);
    std::vector<Matrix> outs;
    Eigen::Index total = 0;
    for (const FittedFunctor& f : branches) {
      outs.push_back(f.transform(x));
      total += outs.back().cols();
    }
    Matrix out(x.rows(), total);
    Eigen::Index at = 0;
    for (const Matrix& m : outs) {
      out.middleCols(at, m.cols()) = m;
      at += m.cols();
    }
    return out;
  }
  std::size_t input_cols() const override { return cols; }
};

Eigen::VectorXd column_means(const Matrix& x) {
  return x.colwise().mean();
}

// Population standard deviation per column; zeros replaced by 1.
Eigen::VectorXd column_stds(const Matrix& x, const Eigen::VectorXd& means) {
  Eigen::VectorXd out(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    double var = (x.col(c).array() - means(c)).square().mean();
    double sd = std::sqrt(var);
    out(c) = sd > 0.0 ? sd : 1.0;
  }
  return out;
}

std::vector<std::vector<std::size_t>> indices_by_class(const Labels& y) {
  int max_label = -1;
  for (int v : y) max_label = std::max(max_label, v);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < y.size(); ++i) out[static_cast<std::size_t>(y[i])].push_back(i);
  return out;
}

double sq_dist(const Matrix& x, std::size_t a, std::size_t b) {
  return (x.row(static_cast<Eigen::Index>(a)) - x.row(static_cast<Eigen::Index>(b))).squaredNorm();
}

Resampled take_rows(const Matrix& x, const Labels& y, const std::vector<std::size_t>& keep) {
  Resampled out;
  out.features.resize(static_cast<Eigen::Index>(keep.size()), x.cols());
  out.labels.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(keep[i]));
    out.labels.push_back(y[keep[i]]);
  }
  return out;
}

}  // namespace

Matrix FittedFunctor::transform(const Matrix& x) const {
  if (!impl_) return x;
  return impl_->transform(x);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  double pos = (static_cast<double>(values.size()) - 1.0) * q / 100.0;
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

FittedFunctor standard_scaler_fit(const Matrix& x, bool with_mean, bool with_std) {
  if (x.rows() == 0) throw std::invalid_argument("cannot fit scaler on empty data");
  auto fn = std::make_shared<ColumnAffineFn>();
  Eigen::VectorXd means = column_means(x);
  fn->center = with_mean ? means : Eigen::VectorXd::Zero(x.cols()).eval();
  fn->scale = with_std ? column_stds(x, means) : Eigen::VectorXd::Ones(x.cols()).eval();
  return FittedFunctor("standard_scaler", std::move(fn));
}

FittedFunctor robust_scaler_fit(const Matrix& x, bool with_centering, bool with_scaling,
                                QuantileRange range) {
  if (x.rows() == 0) throw std::invalid_argument("cannot fit scaler on empty data");
  auto fn = std::make_shared<ColumnAffineFn>();
  fn->center = Eigen::VectorXd::Zero(x.cols());
  fn->scale = Eigen::VectorXd::Ones(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    std::vector<double> col(x.col(c).data(), x.col(c).data() + x.rows());
    if (with_centering) fn->center(c) = quantile(col, 50.0);
    if (with_scaling) {
      double iqr = quantile(col, range.upper) - quantile(col, range.lower);
      fn->scale(c) = iqr > 0.0 ? iqr : 1.0;
    }
  }
  return FittedFunctor("robust_scaler", std::move(fn));
}

FittedFunctor minmax_fit(const Matrix& x) {
  if (x.rows() == 0) throw std::invalid_argument("cannot fit scaler on empty data");
  auto fn = std::make_shared<ColumnAffineFn>();
  fn->center = x.colwise().minCoeff();
  fn->scale = Eigen::VectorXd::Ones(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    double span = x.col(c).maxCoeff() - fn->center(c);
    fn->scale(c) = span > 0.0 ? span : 1.0;
  }
  return FittedFunctor("minmax_scaler", std::move(fn));
}

double yeo_johnson(double x, double lambda) {
  if (x >= 0.0) {
    if (std::abs(lambda) < 1e-12) return std::log1p(x);
    return (std::pow(x + 1.0, lambda) - 1.0) / lambda;
  }
  if (std::abs(lambda - 2.0) < 1e-12) return -std::log1p(-x);
  return -(std::pow(1.0 - x, 2.0 - lambda) - 1.0) / (2.0 - lambda);
}

namespace {

// Gaussian log-likelihood of the Yeo-Johnson transform for one column.
double yj_log_likelihood(const Eigen::VectorXd& col, double lambda) {
  const Eigen::Index n = col.size();
  Eigen::VectorXd t(n);
  double jac = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i) = yeo_johnson(col(i), lambda);
    jac += (col(i) >= 0.0 ? 1.0 : -1.0) * std::log1p(std::abs(col(i)));
  }
  double mean = t.mean();
  double var = (t.array() - mean).square().mean();
  if (!(var > 1e-300)) return -kInf;
  return -0.5 * static_cast<double>(n) * std::log(var) + (lambda - 1.0) * jac;
}

double golden_section_max(const Eigen::VectorXd& col, double a, double b, int iterations) {
  const double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = yj_log_likelihood(col, x1);
  double f2 = yj_log_likelihood(col, x2);
  for (int i = 0; i < iterations; ++i) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = yj_log_likelihood(col, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = yj_log_likelihood(col, x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

FittedFunctor power_transform_fit(const Matrix& x) {
  if (x.rows() == 0) throw std::invalid_argument("cannot fit transform on empty data");
  auto fn = std::make_shared<PowerFn>();
  fn->lambdas.resize(x.cols());
  fn->post_mean.resize(x.cols());
  fn->post_std.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    double lambda = golden_section_max(x.col(c), -5.0, 5.0, 64);
    fn->lambdas(c) = lambda;
    Eigen::VectorXd t(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) t(r) = yeo_johnson(x(r, c), lambda);
    fn->post_mean(c) = t.mean();
    double sd = std::sqrt((t.array() - fn->post_mean(c)).square().mean());
    fn->post_std(c) = sd > 0.0 ? sd : 1.0;
  }
  return FittedFunctor("power_transform", std::move(fn));
}

double f_score(const Eigen::VectorXd& column, const Labels& y) {
  if (static_cast<std::size_t>(column.size()) != y.size())
    throw std::invalid_argument("column and labels length mismatch");
  auto groups = indices_by_class(y);
  std::size_t n_groups = 0;
  for (const auto& g : groups)
    if (!g.empty()) ++n_groups;
  if (n_groups < 2) throw std::invalid_argument("f_score needs at least two classes");

  const double grand_mean = column.mean();
  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    double m = 0.0;
    for (std::size_t i : g) m += column(static_cast<Eigen::Index>(i));
    m /= static_cast<double>(g.size());
    ss_between += static_cast<double>(g.size()) * (m - grand_mean) * (m - grand_mean);
    for (std::size_t i : g) {
      double d = column(static_cast<Eigen::Index>(i)) - m;
      ss_within += d * d;
    }
  }
  const double df_between = static_cast<double>(n_groups - 1);
  const double df_within = static_cast<double>(y.size() - n_groups);
  if (ss_within <= 0.0 || df_within <= 0.0) return ss_between > 0.0 ? kInf : 0.0;
  return (ss_between / df_between) / (ss_within / df_within);
}

FittedFunctor select_k_best_fit(const Matrix& x, const Labels& y, std::size_t k) {
  if (k == 0) throw std::invalid_argument("select_k_best needs k >= 1");
  if (k > static_cast<std::size_t>(x.cols()))
    throw RuntimeIncompatibility("", "select_k_best k=" + std::to_string(k) + " exceeds " +
                                         std::to_string(x.cols()) + " columns");
  std::vector<std::size_t> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> scores(order.size());
  for (std::size_t c = 0; c < order.size(); ++c)
    scores[c] = f_score(x.col(static_cast<Eigen::Index>(c)), y);
  // Highest score first, ties broken by lower column index.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  auto fn = std::make_shared<SelectFn>();
  fn->cols = static_cast<std::size_t>(x.cols());
  fn->indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(fn->indices.begin(), fn->indices.end());
  return FittedFunctor("select_k_best", std::move(fn));
}

PcaModel pca_fit(const Matrix& x, std::size_t k) {
  const std::size_t max_k = std::min<std::size_t>(static_cast<std::size_t>(x.rows()) > 0
                                                      ? static_cast<std::size_t>(x.rows()) - 1
                                                      : 0,
                                                  static_cast<std::size_t>(x.cols()));
  if (k == 0) throw std::invalid_argument("pca needs k >= 1");
  if (k > max_k)
    throw RuntimeIncompatibility("", "pca k=" + std::to_string(k) + " exceeds max " +
                                         std::to_string(max_k) + " for " +
                                         std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                         " data");
  PcaModel model;
  model.mean = column_means(x);
  Matrix centered = x.rowwise() - model.mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca eigendecomposition failed");

  // Eigen returns ascending eigenvalues; take the top k in descending order
  // and fix each component's sign so its largest coefficient is positive.
  model.components.resize(static_cast<Eigen::Index>(k), x.cols());
  model.explained_variance.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    Eigen::Index src = x.cols() - 1 - static_cast<Eigen::Index>(i);
    Eigen::VectorXd comp = solver.eigenvectors().col(src);
    Eigen::Index arg_max = 0;
    comp.cwiseAbs().maxCoeff(&arg_max);
    if (comp(arg_max) < 0.0) comp = -comp;
    model.components.row(static_cast<Eigen::Index>(i)) = comp.transpose();
    model.explained_variance(static_cast<Eigen::Index>(i)) =
        std::max(0.0, solver.eigenvalues()(src));
  }
  auto fn = std::make_shared<PcaFn>();
  fn->mean = model.mean;
  fn->components = model.components;
  model.functor = FittedFunctor("pca", std::move(fn));
  return model;
}

Resampled smote_fit(const Matrix& x, const Labels& y, std::size_t k_neighbors, Rng& rng) {
  if (k_neighbors == 0) throw std::invalid_argument("smote needs k_neighbors >= 1");
  auto classes = indices_by_class(y);
  std::size_t majority = 0;
  for (const auto& g : classes) majority = std::max(majority, g.size());

  std::vector<Eigen::VectorXd> synthetic;
  Labels synthetic_labels;
  for (std::size_t cls = 0; cls < classes.size(); ++cls) {
    const auto& pts = classes[cls];
    if (pts.empty() || pts.size() == majority) continue;
    if (pts.size() < 2)
      throw RuntimeIncompatibility("", "smote: class " + std::to_string(cls) + " has a single sample");
    const std::size_t k_eff = std::min(k_neighbors, pts.size() - 1);
    for (std::size_t need = majority - pts.size(); need > 0; --need) {
      std::size_t base = pts[bounded_uint(rng, pts.size())];
      // k nearest same-class neighbors of the base point, ties by index.
      std::vector<std::pair<double, std::size_t>> dists;
      for (std::size_t p : pts)
        if (p != base) dists.emplace_back(sq_dist(x, base, p), p);
      std::stable_sort(dists.begin(), dists.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      std::size_t neighbor = dists[bounded_uint(rng, k_eff)].second;
      double u = uniform_real(rng);
      Eigen::VectorXd p = x.row(static_cast<Eigen::Index>(base)) +
                          u * (x.row(static_cast<Eigen::Index>(neighbor)) -
                               x.row(static_cast<Eigen::Index>(base)));
      synthetic.push_back(std::move(p));
      synthetic_labels.push_back(static_cast<int>(cls));
    }
  }

  Resampled out;
  out.features.resize(x.rows() + static_cast<Eigen::Index>(synthetic.size()), x.cols());
  out.features.topRows(x.rows()) = x;
  for (std::size_t i = 0; i < synthetic.size(); ++i)
    out.features.row(x.rows() + static_cast<Eigen::Index>(i)) = synthetic[i].transpose();
  out.labels = y;
  out.labels.insert(out.labels.end(), synthetic_labels.begin(), synthetic_labels.end());
  return out;
}

Resampled nearmiss_fit(const Matrix& x, const Labels& y, int version, Rng& rng) {
  (void)rng;  // selection is fully determined by the distance rule
  if (version < 1 || version > 3) throw std::invalid_argument("nearmiss version must be 1, 2 or 3");
  auto classes = indices_by_class(y);
  std::size_t n_classes = 0;
  std::size_t target = std::numeric_limits<std::size_t>::max();
  std::size_t minority_cls = 0;
  for (std::size_t cls = 0; cls < classes.size(); ++cls) {
    if (classes[cls].empty()) continue;
    ++n_classes;
    if (classes[cls].size() < target) {
      target = classes[cls].size();
      minority_cls = cls;
    }
  }
  if (n_classes < 2) throw RuntimeIncompatibility("", "nearmiss needs at least two classes");
  const auto& minority = classes[minority_cls];

  auto mean_dist = [&](std::size_t point, bool nearest) {
    std::vector<double> d;
    d.reserve(minority.size());
    for (std::size_t m : minority) d.push_back(sq_dist(x, point, m));
    std::sort(d.begin(), d.end());
    std::size_t take = std::min<std::size_t>(3, d.size());
    double sum = 0.0;
    if (nearest)
      for (std::size_t i = 0; i < take; ++i) sum += d[i];
    else
      for (std::size_t i = 0; i < take; ++i) sum += d[d.size() - 1 - i];
    return sum / static_cast<double>(take);
  };

  std::vector<char> keep(y.size(), 0);
  for (std::size_t cls = 0; cls < classes.size(); ++cls) {
    const auto& pts = classes[cls];
    if (pts.empty()) continue;
    if (pts.size() <= target || cls == minority_cls) {
      for (std::size_t p : pts) keep[p] = 1;
      continue;
    }
    std::vector<std::size_t> candidates = pts;
    if (version == 3) {
      // Keep only points that are among the 3 nearest of some minority point.
      std::vector<char> near_minority(y.size(), 0);
      for (std::size_t m : minority) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t p : pts) d.emplace_back(sq_dist(x, m, p), p);
        std::stable_sort(d.begin(), d.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 0; i < std::min<std::size_t>(3, d.size()); ++i)
          near_minority[d[i].second] = 1;
      }
      std::vector<std::size_t> filtered;
      for (std::size_t p : pts)
        if (near_minority[p]) filtered.push_back(p);
      if (filtered.size() >= target) candidates = std::move(filtered);
    }
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(candidates.size());
    for (std::size_t p : candidates) scored.emplace_back(mean_dist(p, version != 2), p);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < target; ++i) keep[scored[i].second] = 1;
  }

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) kept.push_back(i);
  return take_rows(x, y, kept);
}

namespace {

int knn_vote(const Matrix& x, const Labels& y, const std::vector<std::size_t>& store,
             std::size_t query, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(store.size());
  for (std::size_t s : store) d.emplace_back(sq_dist(x, query, s), s);
  std::stable_sort(d.begin(), d.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t take = std::min(k, d.size());
  std::vector<int> votes;
  for (std::size_t i = 0; i < take; ++i) {
    int label = y[d[i].second];
    if (static_cast<std::size_t>(label) >= votes.size()) votes.resize(label + 1, 0);
    ++votes[static_cast<std::size_t>(label)];
  }
  int best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

}  // namespace

Resampled cnn_fit(const Matrix& x, const Labels& y, std::size_t n_neighbors, Rng& rng) {
  if (n_neighbors == 0) throw std::invalid_argument("cnn needs n_neighbors >= 1");
  auto classes = indices_by_class(y);
  std::size_t n_classes = 0;
  for (const auto& g : classes)
    if (!g.empty()) ++n_classes;
  if (n_classes < 2) throw RuntimeIncompatibility("", "cnn needs at least two classes");

  // Hart's condensation: the store starts with one random point per class and
  // absorbs every point the current store misclassifies.
  std::vector<char> in_store(y.size(), 0);
  std::vector<std::size_t> store;
  for (const auto& g : classes) {
    if (g.empty()) continue;
    std::size_t pick = g[bounded_uint(rng, g.size())];
    in_store[pick] = 1;
    store.push_back(pick);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (in_store[i]) continue;
      if (knn_vote(x, y, store, i, n_neighbors) != y[i]) {
        in_store[i] = 1;
        store.push_back(i);
        changed = true;
      }
    }
  }
  // Final sweep with 1-NN so every discarded point is consistent with the
  // kept set under the tightest rule.
  changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (in_store[i]) continue;
      if (knn_vote(x, y, store, i, 1) != y[i]) {
        in_store[i] = 1;
        store.push_back(i);
        changed = true;
      }
    }
  }

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (in_store[i]) kept.push_back(i);
  return take_rows(x, y, kept);
}

// --- Catalog ----------------------------------------------------------------

std::string to_string(DataKindTag tag) {
  switch (tag) {
    case DataKindTag::NumericMatrix: return "numeric-matrix";
    case DataKindTag::LabeledNumericMatrix: return "labeled-numeric-matrix";
    case DataKindTag::MixedTable: return "mixed-table";
    case DataKindTag::ClassVector: return "class-vector";
  }
  return "?";
}

void OperatorCatalog::add(OperatorDef def) {
  if (find(def.name())) throw std::invalid_argument("duplicate operator '" + def.name() + "'");
  entries_.push_back(std::move(def));
}

const OperatorDef& OperatorCatalog::get(const std::string& name) const {
  const OperatorDef* def = find(name);
  if (!def) throw std::invalid_argument("unknown operator '" + name + "'");
  return *def;
}

const OperatorDef* OperatorCatalog::find(const std::string& name) const {
  for (const OperatorDef& d : entries_)
    if (d.name() == name) return &d;
  return nullptr;
}

std::size_t resolve_fraction_k(double fraction, std::size_t columns) {
  if (fraction <= 0.0) throw std::invalid_argument("feature fraction must be positive");
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(columns)));
}

namespace {

bool param_bool(const ConfigSpace& space, const Configuration& c, const std::string& name) {
  return std::get<bool>(c.value(space.dim_index(name)));
}
std::int64_t param_int(const ConfigSpace& space, const Configuration& c, const std::string& name) {
  return std::get<std::int64_t>(c.value(space.dim_index(name)));
}
double param_real(const ConfigSpace& space, const Configuration& c, const std::string& name) {
  return std::get<double>(c.value(space.dim_index(name)));
}
std::string param_cat(const ConfigSpace& space, const Configuration& c, const std::string& name) {
  return std::get<std::string>(c.value(space.dim_index(name)));
}

const DataKind kNumeric{DataKindTag::NumericMatrix, std::nullopt};

OperatorSignature make_sig(std::string name, ConfigSpace params, bool train_only = false) {
  OperatorSignature sig;
  sig.name = std::move(name);
  sig.input = kNumeric;
  sig.output = kNumeric;
  sig.params = std::move(params);
  sig.train_only = train_only;
  return sig;
}

FitResult fit_near_miss(const Matrix& x, const Labels& y, const ConfigSpace& space,
                        const Configuration& p, Rng& rng) {
  Resampled r = nearmiss_fit(x, y, static_cast<int>(param_int(space, p, "version")), rng);
  return {std::move(r.features), std::move(r.labels), FittedFunctor()};
}

FitResult fit_cnn(const Matrix& x, const Labels& y, const ConfigSpace& space,
                  const Configuration& p, Rng& rng) {
  Resampled r = cnn_fit(x, y, static_cast<std::size_t>(param_int(space, p, "n_neighbors")), rng);
  return {std::move(r.features), std::move(r.labels), FittedFunctor()};
}

FitResult fit_smote(const Matrix& x, const Labels& y, const ConfigSpace& space,
                    const Configuration& p, Rng& rng) {
  Resampled r = smote_fit(x, y, static_cast<std::size_t>(param_int(space, p, "k_neighbors")), rng);
  return {std::move(r.features), std::move(r.labels), FittedFunctor()};
}

FitResult fit_standard(const Matrix& x, const Labels& y, const ConfigSpace& space,
                       const Configuration& p, Rng&) {
  FittedFunctor f =
      standard_scaler_fit(x, param_bool(space, p, "with_mean"), param_bool(space, p, "with_std"));
  return {f.transform(x), y, std::move(f)};
}

FitResult fit_power(const Matrix& x, const Labels& y, const ConfigSpace&, const Configuration&,
                    Rng&) {
  FittedFunctor f = power_transform_fit(x);
  return {f.transform(x), y, std::move(f)};
}

FitResult fit_minmax(const Matrix& x, const Labels& y, const ConfigSpace&, const Configuration&,
                     Rng&) {
  FittedFunctor f = minmax_fit(x);
  return {f.transform(x), y, std::move(f)};
}

QuantileRange parse_quantile_range(const std::string& s) {
  if (s == "25-75") return {25.0, 75.0};
  if (s == "10-90") return {10.0, 90.0};
  if (s == "5-95") return {5.0, 95.0};
  throw std::invalid_argument("unknown quantile range '" + s + "'");
}

FitResult fit_robust(const Matrix& x, const Labels& y, const ConfigSpace& space,
                     const Configuration& p, Rng&) {
  FittedFunctor f = robust_scaler_fit(x, param_bool(space, p, "with_centering"),
                                      param_bool(space, p, "with_scaling"),
                                      parse_quantile_range(param_cat(space, p, "quantile_range")));
  return {f.transform(x), y, std::move(f)};
}

FitResult fit_pca(const Matrix& x, const Labels& y, const ConfigSpace& space,
                  const Configuration& p, Rng&) {
  std::size_t k = resolve_fraction_k(param_real(space, p, "k_frac"),
                                     static_cast<std::size_t>(x.cols()));
  PcaModel m = pca_fit(x, k);
  return {m.functor.transform(x), y, std::move(m.functor)};
}

FitResult fit_select_k(const Matrix& x, const Labels& y, const ConfigSpace& space,
                       const Configuration& p, Rng&) {
  std::size_t k = resolve_fraction_k(param_real(space, p, "k_frac"),
                                     static_cast<std::size_t>(x.cols()));
  FittedFunctor f = select_k_best_fit(x, y, k);
  return {f.transform(x), y, std::move(f)};
}

FitResult fit_pca_select_union(const Matrix& x, const Labels& y, const ConfigSpace& space,
                               const Configuration& p, Rng&) {
  std::size_t cols = static_cast<std::size_t>(x.cols());
  std::size_t pca_k = resolve_fraction_k(param_real(space, p, "pca_k_frac"), cols);
  std::size_t sel_k = resolve_fraction_k(param_real(space, p, "select_k_frac"), cols);
  auto fn = std::make_shared<StackFn>();
  fn->cols = cols;
  fn->branches.push_back(pca_fit(x, pca_k).functor);
  fn->branches.push_back(select_k_best_fit(x, y, sel_k));
  FittedFunctor f("pca_select_union", std::move(fn));
  return {f.transform(x), y, std::move(f)};
}

const std::vector<double> kFeatureFractions{0.25, 0.5, 0.75, 1.0};

}  // namespace

OperatorCatalog default_catalog() {
  OperatorCatalog cat;
  cat.add(OperatorDef(
      make_sig("near_miss",
               ConfigSpace({ParamDomain::integer_grid("version", {1, 2, 3})}), true),
      &fit_near_miss));
  cat.add(OperatorDef(
      make_sig("condensed_nn",
               ConfigSpace({ParamDomain::integer_grid("n_neighbors", {1, 3, 5})}), true),
      &fit_cnn));
  cat.add(OperatorDef(
      make_sig("smote", ConfigSpace({ParamDomain::integer_grid("k_neighbors", {1, 3, 5})}), true),
      &fit_smote));
  cat.add(OperatorDef(make_sig("standard_scaler",
                               ConfigSpace({ParamDomain::boolean("with_mean"),
                                            ParamDomain::boolean("with_std")})),
                      &fit_standard));
  cat.add(OperatorDef(make_sig("power_transform", ConfigSpace()), &fit_power));
  cat.add(OperatorDef(make_sig("minmax_scaler", ConfigSpace()), &fit_minmax));
  cat.add(OperatorDef(
      make_sig("robust_scaler",
               ConfigSpace({ParamDomain::boolean("with_centering"),
                            ParamDomain::boolean("with_scaling"),
                            ParamDomain::categorical("quantile_range", {"25-75", "10-90", "5-95"})})),
      &fit_robust));
  cat.add(OperatorDef(
      make_sig("pca", ConfigSpace({ParamDomain::real_grid("k_frac", kFeatureFractions)})),
      &fit_pca));
  cat.add(OperatorDef(
      make_sig("select_k_best", ConfigSpace({ParamDomain::real_grid("k_frac", kFeatureFractions)})),
      &fit_select_k));
  cat.add(OperatorDef(
      make_sig("pca_select_union",
               ConfigSpace({ParamDomain::real_grid("pca_k_frac", kFeatureFractions),
                            ParamDomain::real_grid("select_k_frac", kFeatureFractions)})),
      &fit_pca_select_union));
  return cat;
}

}  // namespace flowtune
