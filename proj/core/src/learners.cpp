#include "flowtune/learners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

namespace flowtune {

namespace {

int n_classes_of(const Labels& y) {
  int m = -1;
  for (int v : y) m = std::max(m, v);
  return m + 1;
}

int majority_label(const std::vector<std::size_t>& counts) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[best]) best = c;
  return static_cast<int>(best);
}

struct ConstantModel final : detail::ModelImpl {
  int label = 0;
  Labels predict(const Matrix& x) const override {
    return Labels(static_cast<std::size_t>(x.rows()), label);
  }
  std::size_t input_cols() const override { return 0; }
};

struct LinearModel final : detail::ModelImpl {
  Matrix weights;  // classes x features
  Eigen::VectorXd biases;

  Labels predict(const Matrix& x) const override {
    if (x.cols() != weights.cols())
      throw std::invalid_argument("linear model expects " + std::to_string(weights.cols()) +
                                  " features, got " + std::to_string(x.cols()));
    Labels out;
    out.reserve(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      Eigen::VectorXd scores = weights * x.row(r).transpose() + biases;
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < scores.size(); ++c)
        if (scores(c) > scores(best)) best = c;
      out.push_back(static_cast<int>(best));
    }
    return out;
  }
  std::size_t input_cols() const override { return static_cast<std::size_t>(weights.cols()); }
};

struct MlpModel final : detail::ModelImpl {
  Matrix w1;  // hidden x features
  Eigen::VectorXd b1;
  Matrix w2;  // classes x hidden
  Eigen::VectorXd b2;

  Labels predict(const Matrix& x) const override {
    if (x.cols() != w1.cols())
      throw std::invalid_argument("mlp expects " + std::to_string(w1.cols()) +
                                  " features, got " + std::to_string(x.cols()));
    Labels out;
    out.reserve(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      Eigen::VectorXd h = (w1 * x.row(r).transpose() + b1).cwiseMax(0.0);
      Eigen::VectorXd logits = w2 * h + b2;
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < logits.size(); ++c)
        if (logits(c) > logits(best)) best = c;
      out.push_back(static_cast<int>(best));
    }
    return out;
  }
  std::size_t input_cols() const override { return static_cast<std::size_t>(w1.cols()); }
};

// --- CART decision tree ------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;
};

struct TreeModel final : detail::ModelImpl {
  std::vector<TreeNode> nodes;
  std::size_t cols = 0;

  int predict_row(const Eigen::RowVectorXd& row) const {
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
      const TreeNode& n = nodes[static_cast<std::size_t>(at)];
      at = row(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].label;
  }

  Labels predict(const Matrix& x) const override {
    if (static_cast<std::size_t>(x.cols()) != cols)
      throw std::invalid_argument("tree expects " + std::to_string(cols) + " features, got " +
                                  std::to_string(x.cols()));
    Labels out;
    out.reserve(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) out.push_back(predict_row(x.row(r)));
    return out;
  }
  std::size_t input_cols() const override { return cols; }
};

double gini_from_counts(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (std::size_t c : counts) {
    double p = static_cast<double>(c) / static_cast<double>(total);
    g -= p * p;
  }
  return g;
}

struct TreeBuilder {
  const Matrix& x;
  const Labels& y;
  const TreeParams& params;
  Rng& rng;
  int n_classes;
  std::vector<TreeNode> nodes;

  int build(std::vector<std::size_t> idx, int depth) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i : idx) ++counts[static_cast<std::size_t>(y[i])];
    const int node_id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes[static_cast<std::size_t>(node_id)].label = majority_label(counts);

    const bool pure = *std::max_element(counts.begin(), counts.end()) == idx.size();
    const bool depth_capped = params.max_depth > 0 && depth >= params.max_depth;
    if (pure || depth_capped || idx.size() < static_cast<std::size_t>(params.min_samples_split))
      return node_id;

    // Candidate features: all of them, or a random subset per node.
    std::vector<int> features(static_cast<std::size_t>(x.cols()));
    std::iota(features.begin(), features.end(), 0);
    if (params.max_features_frac < 1.0) {
      std::size_t m = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::ceil(params.max_features_frac * static_cast<double>(x.cols()))));
      for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + static_cast<std::size_t>(bounded_uint(rng, features.size() - i));
        std::swap(features[i], features[j]);
      }
      features.resize(m);
      std::sort(features.begin(), features.end());
    }

    const double parent_gini = gini_from_counts(counts, idx.size());
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = parent_gini;

    std::vector<std::pair<double, int>> sorted;
    sorted.reserve(idx.size());
    for (int f : features) {
      sorted.clear();
      for (std::size_t i : idx) sorted.emplace_back(x(static_cast<Eigen::Index>(i), f), y[i]);
      std::sort(sorted.begin(), sorted.end());

      std::vector<std::size_t> left(static_cast<std::size_t>(n_classes), 0);
      std::vector<std::size_t> right = counts;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        ++left[static_cast<std::size_t>(sorted[i].second)];
        --right[static_cast<std::size_t>(sorted[i].second)];
        if (sorted[i].first == sorted[i + 1].first) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = sorted.size() - nl;
        if (nl < static_cast<std::size_t>(params.min_samples_leaf) ||
            nr < static_cast<std::size_t>(params.min_samples_leaf))
          continue;
        double score = (static_cast<double>(nl) * gini_from_counts(left, nl) +
                        static_cast<double>(nr) * gini_from_counts(right, nr)) /
                       static_cast<double>(sorted.size());
        if (score < best_score - 1e-12) {
          best_score = score;
          best_feature = f;
          best_threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
      if (x(static_cast<Eigen::Index>(i), best_feature) <= best_threshold)
        left_idx.push_back(i);
      else
        right_idx.push_back(i);
    }
    nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
    nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    const int left_id = build(std::move(left_idx), depth + 1);
    nodes[static_cast<std::size_t>(node_id)].left = left_id;
    const int right_id = build(std::move(right_idx), depth + 1);
    nodes[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  }
};

struct ForestModel final : detail::ModelImpl {
  std::vector<TrainedModel> trees;
  int n_classes = 2;
  std::size_t cols = 0;

  Labels predict(const Matrix& x) const override {
    std::vector<std::vector<int>> votes(static_cast<std::size_t>(x.rows()),
                                        std::vector<int>(static_cast<std::size_t>(n_classes), 0));
    for (const TrainedModel& t : trees) {
      Labels p = t.predict(x);
      for (std::size_t r = 0; r < p.size(); ++r) ++votes[r][static_cast<std::size_t>(p[r])];
    }
    Labels out;
    out.reserve(votes.size());
    for (const auto& v : votes) {
      int best = 0;
      for (std::size_t c = 1; c < v.size(); ++c)
        if (v[c] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
      out.push_back(best);
    }
    return out;
  }
  std::size_t input_cols() const override { return cols; }
};

void require_training_data(const Matrix& x, const Labels& y) {
  if (x.rows() == 0 || static_cast<std::size_t>(x.rows()) != y.size())
    throw std::invalid_argument("training data is empty or inconsistent");
}

}  // namespace

Labels TrainedModel::predict(const Matrix& x) const {
  if (!impl_) throw std::logic_error("predict on an untrained model");
  return impl_->predict(x);
}

TrainedModel make_constant_model(int label) {
  auto m = std::make_shared<ConstantModel>();
  m->label = label;
  return TrainedModel(std::move(m));
}

TrainedModel make_linear_model(Matrix class_weights, Eigen::VectorXd biases) {
  auto m = std::make_shared<LinearModel>();
  m->weights = std::move(class_weights);
  m->biases = std::move(biases);
  return TrainedModel(std::move(m));
}

TrainedModel make_mlp_model(Matrix w1, Eigen::VectorXd b1, Matrix w2, Eigen::VectorXd b2) {
  auto m = std::make_shared<MlpModel>();
  m->w1 = std::move(w1);
  m->b1 = std::move(b1);
  m->w2 = std::move(w2);
  m->b2 = std::move(b2);
  return TrainedModel(std::move(m));
}

TrainedModel train_decision_tree(const Matrix& x, const Labels& y, const TreeParams& p, Rng& rng) {
  require_training_data(x, y);
  const int classes = n_classes_of(y);
  if (classes < 2) return make_constant_model(classes - 1);
  TreeBuilder builder{x, y, p, rng, classes, {}};
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), 0);
  builder.build(std::move(idx), 0);
  auto model = std::make_shared<TreeModel>();
  model->nodes = std::move(builder.nodes);
  model->cols = static_cast<std::size_t>(x.cols());
  return TrainedModel(std::move(model));
}

TrainedModel train_random_forest(const Matrix& x, const Labels& y, const ForestParams& p,
                                 Rng& rng) {
  require_training_data(x, y);
  const int classes = n_classes_of(y);
  if (classes < 2) return make_constant_model(classes - 1);
  auto forest = std::make_shared<ForestModel>();
  forest->n_classes = classes;
  forest->cols = static_cast<std::size_t>(x.cols());
  const std::uint64_t base = rng();
  for (int t = 0; t < p.n_estimators; ++t) {
    Rng tree_rng(derive_seed(base, static_cast<std::uint64_t>(t)));
    if (p.bootstrap) {
      Matrix bx(x.rows(), x.cols());
      Labels by(y.size());
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::size_t pick = static_cast<std::size_t>(
            bounded_uint(tree_rng, static_cast<std::uint64_t>(x.rows())));
        bx.row(r) = x.row(static_cast<Eigen::Index>(pick));
        by[static_cast<std::size_t>(r)] = y[pick];
      }
      forest->trees.push_back(train_decision_tree(bx, by, p.tree, tree_rng));
    } else {
      forest->trees.push_back(train_decision_tree(x, y, p.tree, tree_rng));
    }
  }
  return TrainedModel(std::move(forest));
}

TrainedModel train_linear_svm(const Matrix& x, const Labels& y, const SvmParams& p, Rng& rng) {
  require_training_data(x, y);
  const int classes = n_classes_of(y);
  if (classes < 2) return make_constant_model(classes - 1);
  const double n = static_cast<double>(x.rows());
  const double lambda = 1.0 / (p.c * n);

  Matrix weights = Matrix::Zero(classes, x.cols());
  Eigen::VectorXd biases = Eigen::VectorXd::Zero(classes);
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);

  for (int cls = 0; cls < classes; ++cls) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
    double b = 0.0;
    Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(x.cols());
    double b_sum = 0.0;
    std::size_t steps = 0;
    for (int epoch = 0; epoch < p.epochs; ++epoch) {
      shuffle_vec(order, rng);
      for (std::size_t i : order) {
        ++steps;
        const double eta = p.lr0 / (1.0 + p.lr0 * lambda * static_cast<double>(steps));
        const double target = y[i] == cls ? 1.0 : -1.0;
        const auto row = x.row(static_cast<Eigen::Index>(i));
        const double margin = target * (row.dot(w) + b);
        w *= (1.0 - eta * lambda);
        if (margin < 1.0) {
          w += eta * target * row.transpose();
          if (p.fit_intercept) b += eta * target;
        }
        if (p.averaged) {
          w_sum += w;
          b_sum += b;
        }
      }
    }
    if (p.averaged && steps > 0) {
      w = w_sum / static_cast<double>(steps);
      b = b_sum / static_cast<double>(steps);
    }
    weights.row(cls) = w.transpose();
    biases(cls) = b;
  }
  return make_linear_model(std::move(weights), std::move(biases));
}

TrainedModel train_mlp(const Matrix& x, const Labels& y, const MlpParams& p, Rng& rng) {
  require_training_data(x, y);
  const int classes = n_classes_of(y);
  if (classes < 2) return make_constant_model(classes - 1);
  const Eigen::Index d = x.cols();
  const Eigen::Index h = p.hidden;

  Matrix w1(h, d), w2(classes, h);
  const double s1 = std::sqrt(2.0 / static_cast<double>(d));
  const double s2 = std::sqrt(2.0 / static_cast<double>(h));
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < d; ++j) w1(i, j) = s1 * normal_real(rng);
  for (Eigen::Index i = 0; i < classes; ++i)
    for (Eigen::Index j = 0; j < h; ++j) w2(i, j) = s2 * normal_real(rng);
  Eigen::VectorXd b1 = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(classes);

  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);

  Matrix v1 = Matrix::Zero(h, d), v2 = Matrix::Zero(classes, h);
  Eigen::VectorXd vb1 = Eigen::VectorXd::Zero(h), vb2 = Eigen::VectorXd::Zero(classes);

  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    shuffle_vec(order, rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(p.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(p.batch));
      const double inv_m = 1.0 / static_cast<double>(end - start);

      Matrix gw1 = Matrix::Zero(h, d);
      Matrix gw2 = Matrix::Zero(classes, h);
      Eigen::VectorXd gb1 = Eigen::VectorXd::Zero(h);
      Eigen::VectorXd gb2 = Eigen::VectorXd::Zero(classes);

      for (std::size_t s = start; s < end; ++s) {
        const auto row = x.row(static_cast<Eigen::Index>(order[s]));
        Eigen::VectorXd z1 = w1 * row.transpose() + b1;
        Eigen::VectorXd a1 = z1.cwiseMax(0.0);
        Eigen::VectorXd logits = w2 * a1 + b2;
        logits.array() -= logits.maxCoeff();
        Eigen::VectorXd soft = logits.array().exp();
        soft /= soft.sum();
        soft(y[order[s]]) -= 1.0;  // d(cross-entropy)/d(logits)
        gw2 += soft * a1.transpose();
        gb2 += soft;
        Eigen::VectorXd dh = w2.transpose() * soft;
        for (Eigen::Index i = 0; i < h; ++i)
          if (z1(i) <= 0.0) dh(i) = 0.0;
        gw1 += dh * row;
        gb1 += dh;
      }
      v1 = p.momentum * v1 - p.lr * (inv_m * gw1 + p.l2 * w1);
      v2 = p.momentum * v2 - p.lr * (inv_m * gw2 + p.l2 * w2);
      vb1 = p.momentum * vb1 - p.lr * inv_m * gb1;
      vb2 = p.momentum * vb2 - p.lr * inv_m * gb2;
      w1 += v1;
      w2 += v2;
      b1 += vb1;
      b2 += vb2;
    }
  }
  return make_mlp_model(std::move(w1), std::move(b1), std::move(w2), std::move(b2));
}

// --- Specs --------------------------------------------------------------------

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::DecisionTree: return "decision_tree";
    case LearnerKind::RandomForest: return "random_forest";
    case LearnerKind::LinearSvm: return "linear_svm";
    case LearnerKind::Mlp: return "mlp";
  }
  return "?";
}

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "decision_tree") return LearnerKind::DecisionTree;
  if (s == "random_forest") return LearnerKind::RandomForest;
  if (s == "linear_svm") return LearnerKind::LinearSvm;
  if (s == "mlp") return LearnerKind::Mlp;
  throw std::invalid_argument("unknown learner kind '" + s + "'");
}

LearnerSpec make_learner_spec(LearnerKind kind, ConfigSpace space, Configuration default_config) {
  if (!space.is_valid(default_config))
    throw std::invalid_argument("default configuration is not valid in the learner space");
  return LearnerSpec{kind, std::move(space), std::move(default_config)};
}

LearnerSpec make_learner_spec(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::DecisionTree: {
      ConfigSpace space({ParamDomain::integer_grid("max_depth", {0, 1, 2, 3, 4, 5, 6, 8, 10, 16}),
                         ParamDomain::integer_grid("min_samples_split", {2, 3, 4, 6, 8, 12, 16, 24}),
                         ParamDomain::integer_grid("min_samples_leaf", {1, 2, 3, 4, 6, 8}),
                         ParamDomain::real_grid("max_features_frac",
                                                {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0})});
      Configuration def = space.from_assignments({{"max_depth", std::int64_t{0}},
                                                  {"min_samples_split", std::int64_t{2}},
                                                  {"min_samples_leaf", std::int64_t{1}},
                                                  {"max_features_frac", 1.0}});
      return {kind, std::move(space), std::move(def)};
    }
    case LearnerKind::RandomForest: {
      ConfigSpace space(
          {ParamDomain::integer_grid("n_estimators", {5, 10, 15, 20, 25, 30, 40, 50, 75, 100}),
           ParamDomain::integer_grid("max_depth", {0, 1, 2, 4, 6, 8, 12, 16}),
           ParamDomain::real_grid("max_features_frac", {0.1, 0.25, 0.4, 0.5, 0.75, 1.0}),
           ParamDomain::integer_grid("min_samples_leaf", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10})});
      Configuration def = space.from_assignments({{"n_estimators", std::int64_t{25}},
                                                  {"max_depth", std::int64_t{0}},
                                                  {"max_features_frac", 0.5},
                                                  {"min_samples_leaf", std::int64_t{1}}});
      return {kind, std::move(space), std::move(def)};
    }
    case LearnerKind::LinearSvm: {
      ConfigSpace space(
          {ParamDomain::real_grid("c", {0.0001, 0.0003, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0,
                                        3.0, 10.0, 30.0}),
           ParamDomain::integer_grid("epochs", {20, 50, 100, 200}),
           ParamDomain::real_grid("lr0", {0.03, 0.1, 0.3, 1.0}),
           ParamDomain::boolean("fit_intercept"), ParamDomain::boolean("averaged")});
      Configuration def = space.from_assignments({{"c", 1.0},
                                                  {"epochs", std::int64_t{100}},
                                                  {"lr0", 0.1},
                                                  {"fit_intercept", true},
                                                  {"averaged", true}});
      return {kind, std::move(space), std::move(def)};
    }
    case LearnerKind::Mlp: {
      ConfigSpace space({ParamDomain::integer_grid("hidden", {8, 16, 32, 64, 128, 256}),
                         ParamDomain::real_grid("lr", {0.001, 0.003, 0.01, 0.03, 0.1, 0.3}),
                         ParamDomain::integer_grid("epochs", {25, 50, 100}),
                         ParamDomain::integer_grid("batch", {16, 32, 64}),
                         ParamDomain::real_grid("l2", {0.0, 0.0001, 0.001}),
                         ParamDomain::real_grid("momentum", {0.0, 0.9})});
      Configuration def = space.from_assignments({{"hidden", std::int64_t{32}},
                                                  {"lr", 0.03},
                                                  {"epochs", std::int64_t{50}},
                                                  {"batch", std::int64_t{32}},
                                                  {"l2", 0.0},
                                                  {"momentum", 0.9}});
      return {kind, std::move(space), std::move(def)};
    }
  }
  throw std::logic_error("bad learner kind");
}

namespace {

std::int64_t cget_int(const ConfigSpace& s, const Configuration& c, const std::string& n) {
  return std::get<std::int64_t>(c.value(s.dim_index(n)));
}
double cget_real(const ConfigSpace& s, const Configuration& c, const std::string& n) {
  return std::get<double>(c.value(s.dim_index(n)));
}
bool cget_bool(const ConfigSpace& s, const Configuration& c, const std::string& n) {
  return std::get<bool>(c.value(s.dim_index(n)));
}

}  // namespace

TrainedModel train(const LearnerSpec& spec, const Configuration& config, const Matrix& x,
                   const Labels& y, Rng& rng) {
  if (!spec.space.is_valid(config))
    throw std::invalid_argument("configuration is not valid in the learner space");
  const ConfigSpace& s = spec.space;
  switch (spec.kind) {
    case LearnerKind::DecisionTree: {
      TreeParams p;
      p.max_depth = static_cast<int>(cget_int(s, config, "max_depth"));
      p.min_samples_split = static_cast<int>(cget_int(s, config, "min_samples_split"));
      p.min_samples_leaf = static_cast<int>(cget_int(s, config, "min_samples_leaf"));
      p.max_features_frac = cget_real(s, config, "max_features_frac");
      return train_decision_tree(x, y, p, rng);
    }
    case LearnerKind::RandomForest: {
      ForestParams p;
      p.n_estimators = static_cast<int>(cget_int(s, config, "n_estimators"));
      p.tree.max_depth = static_cast<int>(cget_int(s, config, "max_depth"));
      p.tree.max_features_frac = cget_real(s, config, "max_features_frac");
      p.tree.min_samples_leaf = static_cast<int>(cget_int(s, config, "min_samples_leaf"));
      return train_random_forest(x, y, p, rng);
    }
    case LearnerKind::LinearSvm: {
      SvmParams p;
      p.c = cget_real(s, config, "c");
      p.epochs = static_cast<int>(cget_int(s, config, "epochs"));
      p.lr0 = cget_real(s, config, "lr0");
      p.fit_intercept = cget_bool(s, config, "fit_intercept");
      p.averaged = cget_bool(s, config, "averaged");
      return train_linear_svm(x, y, p, rng);
    }
    case LearnerKind::Mlp: {
      MlpParams p;
      p.hidden = static_cast<int>(cget_int(s, config, "hidden"));
      p.lr = cget_real(s, config, "lr");
      p.epochs = static_cast<int>(cget_int(s, config, "epochs"));
      p.batch = static_cast<int>(cget_int(s, config, "batch"));
      p.l2 = cget_real(s, config, "l2");
      p.momentum = cget_real(s, config, "momentum");
      return train_mlp(x, y, p, rng);
    }
  }
  throw std::logic_error("bad learner kind");
}

double accuracy(const Labels& predicted, const Labels& truth) {
  if (predicted.size() != truth.size() || truth.empty())
    throw std::invalid_argument("prediction/label size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<int> stratified_folds(const Labels& y, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
  const int classes = n_classes_of(y);
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(y[i])].push_back(i);
  for (int c = 0; c < classes; ++c)
    if (by_class[static_cast<std::size_t>(c)].size() < static_cast<std::size_t>(k))
      throw std::invalid_argument("class " + std::to_string(c) + " has fewer than " +
                                  std::to_string(k) + " samples; stratification impossible");
  Rng rng(seed);
  std::vector<int> fold(y.size(), 0);
  int offset = 0;
  for (auto& members : by_class) {
    shuffle_vec(members, rng);
    for (std::size_t i = 0; i < members.size(); ++i)
      fold[members[i]] = static_cast<int>((i + static_cast<std::size_t>(offset)) %
                                          static_cast<std::size_t>(k));
    ++offset;  // rotate the starting fold so small classes spread evenly
  }
  return fold;
}

namespace {

Evaluation run_folds(int k, const std::function<double(int)>& fold_accuracy) {
  const auto start = std::chrono::steady_clock::now();
  Evaluation ev;
  ev.fold_accuracies.reserve(static_cast<std::size_t>(k));
  try {
    double sum = 0.0;
    for (int f = 0; f < k; ++f) {
      double a = fold_accuracy(f);
      ev.fold_accuracies.push_back(a);
      sum += a;
    }
    ev.mean_accuracy = sum / static_cast<double>(k);
    ev.loss = 1.0 - ev.mean_accuracy;
  } catch (const RuntimeIncompatibility& e) {
    ev = Evaluation{};
    ev.incompatibility = e.what();
  }
  ev.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return ev;
}

void split_by_fold(const Matrix& x, const Labels& y, const std::vector<int>& fold, int f,
                   Matrix& train_x, Labels& train_y, Matrix& val_x, Labels& val_y) {
  std::vector<std::size_t> tr, va;
  for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? va : tr).push_back(i);
  train_x.resize(static_cast<Eigen::Index>(tr.size()), x.cols());
  val_x.resize(static_cast<Eigen::Index>(va.size()), x.cols());
  train_y.clear();
  val_y.clear();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    train_x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(tr[i]));
    train_y.push_back(y[tr[i]]);
  }
  for (std::size_t i = 0; i < va.size(); ++i) {
    val_x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(va[i]));
    val_y.push_back(y[va[i]]);
  }
}

}  // namespace

Evaluation cross_val_score(const PipelineInstance& pipe, const OperatorCatalog& catalog,
                           const LearnerSpec& spec, const Configuration& algo_config,
                           const Dataset& dataset, int k, std::uint64_t seed) {
  std::vector<int> fold = stratified_folds(dataset.labels, k, derive_seed(seed, 0x0F01));
  return run_folds(k, [&](int f) {
    Matrix train_x, val_x;
    Labels train_y, val_y;
    split_by_fold(dataset.features, dataset.labels, fold, f, train_x, train_y, val_x, val_y);
    Rng pipe_rng(derive_seed(seed, 0x1000 + static_cast<std::uint64_t>(f)));
    PipelineFit fitted = fit_transform(pipe, catalog, train_x, train_y, pipe_rng);
    Matrix val_t = fitted.fitted.apply(val_x);
    Rng learn_rng(derive_seed(seed, 0x2000 + static_cast<std::uint64_t>(f)));
    TrainedModel model = train(spec, algo_config, fitted.features, fitted.labels, learn_rng);
    return accuracy(model.predict(val_t), val_y);
  });
}

Evaluation cross_val_algo(const Matrix& x, const Labels& y, const LearnerSpec& spec,
                          const Configuration& algo_config, int k, std::uint64_t seed) {
  std::vector<int> fold = stratified_folds(y, k, derive_seed(seed, 0x0F01));
  return run_folds(k, [&](int f) {
    Matrix train_x, val_x;
    Labels train_y, val_y;
    split_by_fold(x, y, fold, f, train_x, train_y, val_x, val_y);
    Rng learn_rng(derive_seed(seed, 0x2000 + static_cast<std::uint64_t>(f)));
    TrainedModel model = train(spec, algo_config, train_x, train_y, learn_rng);
    return accuracy(model.predict(val_x), val_y);
  });
}

}  // namespace flowtune
