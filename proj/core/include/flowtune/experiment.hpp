#pragma once

#include "flowtune/serialize.hpp"

namespace flowtune {

/// A fully declarative, seeded experiment. One document determines one run.
struct ExperimentConfig {
  int schema = 1;
  std::string dataset_ref = "iris";
  std::string label_column = "label";
  PrototypePtr prototype;
  OperatorCatalog catalog;
  LearnerSpec learner;
  Optimizer::Kind optimizer_kind = Optimizer::Kind::Tpe;
  TpeParams tpe;
  Policy policy = IterativePolicy{};
  double cauchy_epsilon = 1e-4;
  BudgetMode budget_mode = BudgetMode::EvalCount;
  double budget_total = 100.0;
  int cv_folds = 10;
  std::uint64_t seed = 0;
  std::string density_target = "pipeline";  // or "algorithm"

  Optimizer make_optimizer() const { return Optimizer(optimizer_kind, tpe); }
};

ExperimentConfig experiment_from_json(const Json& j);
ExperimentConfig load_experiment(const std::string& path);

/// `"split:0.25"`, `"iterative:15"`, `"adaptive:15"`, `"joint"`.
Policy parse_policy(const std::string& text);
std::string policy_slug(const Policy& policy);

struct DensityRow {
  std::size_t index = 0;
  Configuration config;
  double loss = 0.0;
  double accuracy = 0.0;
  bool incompatible = false;
};

struct DensityResult {
  ConfigSpace space;
  bool exhaustive = true;
  std::vector<DensityRow> rows;  // excludes the baseline in exhaustive mode
  double baseline_accuracy = 0.0;
  double best_accuracy = 0.0;
  /// 1-based trial index of the first strict improvement over the baseline
  /// and of the first trial reaching the final best; -1 when never.
  long long evals_to_first_improvement = -1;
  long long evals_to_best = -1;
};

inline constexpr std::uint64_t kExhaustiveGuard = 100000;

/// Scores every configuration of the target space (exhaustive mode, guarded
/// at 1e5) or a seeded optimizer run of `budget` trials beyond the baseline.
DensityResult density_study(const ExperimentConfig& exp, bool exhaustive, std::uint64_t budget);

void write_density_csv(const std::string& path, const DensityResult& result);

struct CompareRun {
  Policy policy;
  std::uint64_t seed = 0;
  RunReport report;
};

/// Runs the two-stage process per (policy, seed) pair.
std::vector<CompareRun> policy_compare(const ExperimentConfig& exp,
                                       const std::vector<Policy>& policies,
                                       const std::vector<std::uint64_t>& seeds);

Objective make_objective(const ExperimentConfig& exp);
RunReport run_experiment(const ExperimentConfig& exp);

void write_trace_jsonl(const std::string& path, const RunReport& report,
                       const ConfigSpace& pipeline_space, const ConfigSpace& algo_space);
void write_run_summary(const std::string& path, const RunReport& report,
                       const ConfigSpace& pipeline_space, const ConfigSpace& algo_space);
/// Best-accuracy-versus-consumed-budget samples for all runs, one CSV.
void write_compare_csv(const std::string& path, const std::vector<CompareRun>& runs);

/// Recomputes the best trial from a JSONL trace; used to cross-check that
/// emitted traces are self-contained.
struct TraceCheck {
  std::size_t trials = 0;
  std::size_t best_index = 0;
  double best_loss = std::numeric_limits<double>::infinity();
};
TraceCheck replay_trace_jsonl(const std::string& path);

}  // namespace flowtune
