#pragma once

#include <functional>
#include <variant>

#include "flowtune/learners.hpp"
#include "flowtune/metaopt.hpp"

namespace flowtune {

enum class BudgetMode { WallSeconds, EvalCount };

std::string to_string(BudgetMode m);
BudgetMode budget_mode_from_string(const std::string& s);

/// Shared budget with per-phase ledgers. An evaluation started before
/// exhaustion always runs to completion, so in wall mode `consumed` may
/// exceed `total` by one in-flight evaluation; in eval-count mode charges
/// are whole units and the total is exact.
class BudgetClock {
 public:
  BudgetClock(BudgetMode mode, double total);

  BudgetMode mode() const { return mode_; }
  double total() const { return total_; }
  double consumed() const { return consumed_; }
  double remaining() const { return consumed_ >= total_ ? 0.0 : total_ - consumed_; }
  bool exhausted() const { return consumed_ >= total_; }
  void charge(Phase phase, double amount);
  double phase_consumed(Phase phase) const;

 private:
  BudgetMode mode_;
  double total_;
  double consumed_ = 0.0;
  double by_phase_[3] = {0.0, 0.0, 0.0};
};

struct SplitPolicy {
  double omega = 0.5;  // share of the budget given to the algorithm phase
};
struct IterativePolicy {
  double slice = 15.0;
};
struct AdaptivePolicy {
  double initial_slice = 15.0;
};
struct JointPolicy {};

using Policy = std::variant<SplitPolicy, IterativePolicy, AdaptivePolicy, JointPolicy>;

std::string policy_descriptor(const Policy& p);

/// Budget split (T1, T2) = ((1-omega) T, omega T): T1 runs the pipeline
/// phase first, T2 the algorithm phase. Eval-count budgets round T1 to whole
/// evaluations with T2 absorbing the remainder.
std::pair<double, double> split_schedule(double omega, double total, BudgetMode mode);

/// Doubling/halving automaton for the adaptive policy, tracked per phase.
struct AdaptiveState {
  double pipeline_slice = 15.0;
  double algorithm_slice = 15.0;
  int pipeline_no_improve = 0;
  int algorithm_no_improve = 0;
  double min_slice = 1.0;
  double max_slice = 1e18;
};

/// One slice outcome: improvement doubles the phase's next slice and resets
/// its counter; two consecutive misses halve it (floored at min_slice).
AdaptiveState adaptive_update(AdaptiveState state, Phase phase, bool improved);

/// Transformed dataset handed to an inner loop; the fingerprint identifies
/// the exact matrix so traces can prove all inner evaluations shared it.
struct TransformedData {
  Matrix features;
  Labels labels;
  std::string fingerprint;
};

/// The search problem seen by the policy loops. The default ML objective is
/// built by make_ml_objective; tests inject synthetic closed-form ones.
struct Objective {
  ConfigSpace pipeline_space;
  ConfigSpace algo_space;
  Configuration baseline_pipeline;
  Configuration baseline_algo;
  /// Full evaluation of a (pipeline, algorithm) point: per-fold pipeline
  /// refits, incompatibilities surfacing as infinite loss.
  std::function<Evaluation(const Configuration&, const Configuration&, std::uint64_t)> evaluate;
  /// One pipeline applied to the whole dataset, feeding an inner loop.
  std::function<TransformedData(const Configuration&, std::uint64_t)> transform;
  /// Algorithm-only evaluation on a transformed dataset.
  std::function<Evaluation(const TransformedData&, const Configuration&, std::uint64_t)>
      evaluate_on;
};

struct MlObjectiveSetup {
  PrototypePtr prototype;
  OperatorCatalog catalog;
  LearnerSpec learner;
  Dataset dataset;
  int cv_folds = 10;
};

Objective make_ml_objective(std::shared_ptr<const MlObjectiveSetup> setup);

struct TraceEntry {
  std::size_t eval_index = 0;
  Phase phase = Phase::Pipeline;
  double clock = 0.0;
  Configuration pipeline_config;
  Configuration algo_config;
  double loss = 0.0;
  double accuracy = 0.0;
  std::string incompatibility;  // empty unless loss is infinite
  std::string fingerprint;      // set on algorithm-phase trials
};

struct SliceRecord {
  Phase phase = Phase::Pipeline;
  double budget = 0.0;
  std::size_t trials = 0;
  bool improved = false;
};

struct RunReport {
  std::vector<TraceEntry> trace;
  std::size_t best_index = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  double best_accuracy = 0.0;
  Configuration best_pipeline;
  Configuration best_algo;
  double pipeline_consumed = 0.0;
  double algorithm_consumed = 0.0;
  double joint_consumed = 0.0;
  double total_consumed = 0.0;
  std::vector<SliceRecord> slices;
  std::string policy;
  BudgetMode budget_mode = BudgetMode::EvalCount;
  double budget_total = 0.0;
  double cauchy_epsilon = 0.0;
  std::uint64_t seed = 0;
};

struct RunOptions {
  Optimizer pipeline_optimizer{Optimizer::Kind::Tpe};
  Optimizer algo_optimizer{Optimizer::Kind::Tpe};
  /// Cauchy threshold on the inner loop's best-score sequence; 0 disables
  /// the criterion, +infinity stops every inner loop after two evaluations.
  double cauchy_epsilon = 1e-4;
};

/// Runs one policy under the given budget. The baseline (all-empty pipeline,
/// default algorithm configuration) is always evaluated first as trial 0 and
/// is charged to the first active phase.
RunReport run_policy(const Objective& objective, const Policy& policy, BudgetClock clock,
                     const RunOptions& options, std::uint64_t seed);

/// Splits a union-space configuration of `joint_space(objective)` back into
/// its pipeline and algorithm parts.
ConfigSpace joint_space(const Objective& objective);

}  // namespace flowtune
