#include "flowtune/metaopt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flowtune {

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Pipeline: return "pipeline";
    case Phase::Algorithm: return "algorithm";
    case Phase::Joint: return "joint";
  }
  return "?";
}

Phase phase_from_string(const std::string& s) {
  if (s == "pipeline") return Phase::Pipeline;
  if (s == "algorithm") return Phase::Algorithm;
  if (s == "joint") return Phase::Joint;
  throw std::invalid_argument("unknown phase '" + s + "'");
}

void History::observe(Trial trial) {
  trial.eval_index = trials_.size();
  const double loss = trial.loss;
  trials_.push_back(std::move(trial));
  if (std::isfinite(loss) && (!best_ || loss < trials_[*best_].loss))
    best_ = trials_.size() - 1;
}

std::size_t History::best_index() const {
  if (!best_) throw std::logic_error("no finite-loss trial observed yet");
  return *best_;
}

const Trial& History::best() const { return trials_[best_index()]; }

Optimizer::Optimizer(Kind kind, TpeParams params) : kind_(kind), params_(params) {
  if (params_.good_quantile <= 0.0 || params_.good_quantile >= 1.0)
    throw std::invalid_argument("good_quantile must lie strictly between 0 and 1");
  if (params_.candidates < 1) throw std::invalid_argument("candidate count must be >= 1");
}

Configuration Optimizer::suggest(const ConfigSpace& space, const History& history,
                                 Rng& rng) const {
  if (space.cardinality() == 0) throw std::logic_error("cannot suggest from an empty space");
  if (kind_ == Kind::Random) return space.sample(rng);
  return suggest_tpe(space, history, rng);
}

namespace {

// Per-dimension sampling weights over the grid values of one domain,
// estimated from one side of the good/bad split. A uniform prior with the
// mass of one pseudo-observation keeps unseen values reachable.
std::vector<double> density_weights(const ParamDomain& dom,
                                    const std::vector<std::size_t>& observed_indices) {
  const std::size_t n = dom.size();
  const double m = static_cast<double>(observed_indices.size());
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (observed_indices.empty()) return w;

  std::vector<double> density(n, 0.0);
  if (dom.is_numeric()) {
    const double range = dom.numeric_max() - dom.numeric_min();
    const double bandwidth = std::max(dom.min_step(), range / 20.0);
    if (bandwidth <= 0.0) return w;  // single-value domain
    for (std::size_t obs : observed_indices) {
      const double center = dom.numeric_at(obs);
      for (std::size_t i = 0; i < n; ++i) {
        const double z = (dom.numeric_at(i) - center) / bandwidth;
        density[i] += std::exp(-0.5 * z * z);
      }
    }
  } else {
    for (std::size_t obs : observed_indices) density[obs] += 1.0;
  }
  double total = std::accumulate(density.begin(), density.end(), 0.0);
  if (total <= 0.0) return w;
  const double prior = 1.0 / (m + 1.0) / static_cast<double>(n);
  const double scale = m / (m + 1.0) / total;
  for (std::size_t i = 0; i < n; ++i) w[i] = scale * density[i] + prior;
  return w;
}

std::size_t sample_weighted(const std::vector<double>& w, Rng& rng) {
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  double u = uniform_real(rng) * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    u -= w[i];
    if (u < 0.0) return i;
  }
  return w.size() - 1;
}

}  // namespace

Configuration Optimizer::suggest_tpe(const ConfigSpace& space, const History& history,
                                     Rng& rng) const {
  std::vector<std::size_t> finite;
  std::vector<std::size_t> infinite;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const Trial& t = history.trials()[i];
    if (t.config.space_id() != space.id()) continue;
    (std::isfinite(t.loss) ? finite : infinite).push_back(i);
  }
  if (finite.size() < static_cast<std::size_t>(params_.min_history)) return space.sample(rng);

  // Split at the good quantile; incompatible (+inf) trials always land in
  // the bad set so their neighborhoods are avoided, not forgotten.
  std::stable_sort(finite.begin(), finite.end(), [&](std::size_t a, std::size_t b) {
    return history.trials()[a].loss < history.trials()[b].loss;
  });
  const std::size_t n_good = static_cast<std::size_t>(
      std::ceil(params_.good_quantile * static_cast<double>(finite.size())));
  std::vector<std::size_t> good(finite.begin(), finite.begin() + static_cast<std::ptrdiff_t>(n_good));
  std::vector<std::size_t> bad(finite.begin() + static_cast<std::ptrdiff_t>(n_good), finite.end());
  bad.insert(bad.end(), infinite.begin(), infinite.end());

  // Per-dimension observations (value indices) from trials where the
  // dimension was active.
  const std::size_t n_dims = space.dim_count();
  std::vector<std::vector<std::size_t>> good_obs(n_dims), bad_obs(n_dims);
  auto collect = [&](const std::vector<std::size_t>& set,
                     std::vector<std::vector<std::size_t>>& out) {
    for (std::size_t ti : set) {
      const Configuration& c = history.trials()[ti].config;
      for (std::size_t d = 0; d < n_dims; ++d)
        if (c.has_value(d))
          if (auto idx = space.dim(d).index_of(c.value(d))) out[d].push_back(*idx);
    }
  };
  collect(good, good_obs);
  collect(bad, bad_obs);

  std::vector<std::vector<double>> l_weights(n_dims), g_weights(n_dims);
  for (std::size_t d = 0; d < n_dims; ++d) {
    l_weights[d] = density_weights(space.dim(d), good_obs[d]);
    g_weights[d] = density_weights(space.dim(d), bad_obs[d]);
  }

  // Draw candidates from the good density and keep the best ratio l/g.
  // On a finite grid the ratio is maximal at already-tried points, so
  // unvisited candidates take precedence; re-evaluation only happens once
  // every candidate has been seen before.
  auto visited = [&](const Configuration& c) {
    for (std::size_t i = 0; i < history.size(); ++i)
      if (history.trials()[i].config == c) return true;
    return false;
  };
  std::optional<Configuration> best_fresh, best_any;
  double best_fresh_score = -std::numeric_limits<double>::infinity();
  double best_any_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < params_.candidates; ++c) {
    std::vector<std::optional<Value>> values(n_dims);
    double score = 0.0;
    for (std::size_t d = 0; d < n_dims; ++d) {
      if (!space.is_active(values, d)) continue;
      std::size_t vi = sample_weighted(l_weights[d], rng);
      values[d] = space.dim(d).value_at(vi);
      score += std::log(l_weights[d][vi]) - std::log(g_weights[d][vi]);
    }
    Configuration candidate(space.id(), std::move(values));
    if (score > best_any_score) {
      best_any_score = score;
      best_any = candidate;
    }
    if (score > best_fresh_score && !visited(candidate)) {
      best_fresh_score = score;
      best_fresh = std::move(candidate);
    }
  }
  return best_fresh ? *best_fresh : *best_any;
}

Optimizer::Kind optimizer_kind_from_string(const std::string& s) {
  if (s == "random") return Optimizer::Kind::Random;
  if (s == "tpe") return Optimizer::Kind::Tpe;
  throw std::invalid_argument("unknown optimizer kind '" + s + "'");
}

std::string to_string(Optimizer::Kind k) {
  return k == Optimizer::Kind::Random ? "random" : "tpe";
}

}  // namespace flowtune
