#pragma once

#include <limits>

#include "flowtune/configspace.hpp"

namespace flowtune {

enum class Phase { Pipeline, Algorithm, Joint };

std::string to_string(Phase p);
Phase phase_from_string(const std::string& s);

/// One evaluated configuration. `loss` is +infinity exactly when the
/// evaluation reported an incompatibility.
struct Trial {
  Configuration config;
  double loss = std::numeric_limits<double>::infinity();
  Phase phase = Phase::Pipeline;
  double clock = 0.0;  // budget consumed when the trial finished
  std::size_t eval_index = 0;
};

/// Append-only trial log with the running best. Ties keep the earlier trial;
/// the best is undefined while every trial is infinite.
class History {
 public:
  void observe(Trial trial);

  const std::vector<Trial>& trials() const { return trials_; }
  std::size_t size() const { return trials_.size(); }
  bool has_best() const { return best_.has_value(); }
  std::size_t best_index() const;
  const Trial& best() const;

 private:
  std::vector<Trial> trials_;
  std::optional<std::size_t> best_;
};

struct TpeParams {
  double good_quantile = 0.25;  // fraction of finite trials in the good set
  int candidates = 24;          // draws from the good density per suggestion
  int min_history = 8;          // uniform sampling until this many finite trials
};

/// Configuration suggester: uniform random search, or a per-dimension
/// density-ratio (Parzen estimator) scheme. Suggestions are a pure function
/// of (space, history, generator state), so identical seeds replay exactly.
class Optimizer {
 public:
  enum class Kind { Random, Tpe };

  explicit Optimizer(Kind kind, TpeParams params = {});

  Kind kind() const { return kind_; }
  const TpeParams& params() const { return params_; }

  Configuration suggest(const ConfigSpace& space, const History& history, Rng& rng) const;

 private:
  Configuration suggest_tpe(const ConfigSpace& space, const History& history, Rng& rng) const;

  Kind kind_;
  TpeParams params_;
};

Optimizer::Kind optimizer_kind_from_string(const std::string& s);
std::string to_string(Optimizer::Kind k);

}  // namespace flowtune
