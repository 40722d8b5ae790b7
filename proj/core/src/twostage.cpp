#include "flowtune/twostage.hpp"

#include <algorithm>
#include <cmath>

namespace flowtune {

std::string to_string(BudgetMode m) {
  return m == BudgetMode::WallSeconds ? "wall" : "evals";
}

BudgetMode budget_mode_from_string(const std::string& s) {
  if (s == "wall") return BudgetMode::WallSeconds;
  if (s == "evals") return BudgetMode::EvalCount;
  throw std::invalid_argument("unknown budget mode '" + s + "'");
}

BudgetClock::BudgetClock(BudgetMode mode, double total) : mode_(mode), total_(total) {
  if (total < 0.0) throw std::invalid_argument("budget total must be non-negative");
}

void BudgetClock::charge(Phase phase, double amount) {
  consumed_ += amount;
  by_phase_[static_cast<int>(phase)] += amount;
}

double BudgetClock::phase_consumed(Phase phase) const {
  return by_phase_[static_cast<int>(phase)];
}

std::string policy_descriptor(const Policy& p) {
  struct Visitor {
    std::string operator()(const SplitPolicy& s) const {
      return "split(omega=" + std::to_string(s.omega) + ")";
    }
    std::string operator()(const IterativePolicy& s) const {
      return "iterative(t=" + std::to_string(s.slice) + ")";
    }
    std::string operator()(const AdaptivePolicy& s) const {
      return "adaptive(t0=" + std::to_string(s.initial_slice) + ")";
    }
    std::string operator()(const JointPolicy&) const { return "joint"; }
  };
  return std::visit(Visitor{}, p);
}

std::pair<double, double> split_schedule(double omega, double total, BudgetMode mode) {
  if (omega < 0.0 || omega > 1.0) throw std::invalid_argument("omega must lie in [0,1]");
  double t1 = (1.0 - omega) * total;
  if (mode == BudgetMode::EvalCount) t1 = static_cast<double>(std::llround(t1));
  return {t1, total - t1};
}

AdaptiveState adaptive_update(AdaptiveState state, Phase phase, bool improved) {
  double& slice = phase == Phase::Pipeline ? state.pipeline_slice : state.algorithm_slice;
  int& counter = phase == Phase::Pipeline ? state.pipeline_no_improve : state.algorithm_no_improve;
  if (improved) {
    slice = std::min(slice * 2.0, state.max_slice);
    counter = 0;
  } else if (++counter >= 2) {
    slice = std::max(slice / 2.0, state.min_slice);
    counter = 0;
  }
  return state;
}

namespace {

ConfigSpace prefix_space(const ConfigSpace& s, const std::string& prefix) {
  std::vector<ParamDomain> dims;
  dims.reserve(s.dim_count());
  for (const ParamDomain& d : s.dims()) {
    switch (d.kind()) {
      case ParamDomain::Kind::Boolean:
        dims.push_back(ParamDomain::boolean(prefix + d.name()));
        break;
      case ParamDomain::Kind::IntegerGrid:
        dims.push_back(ParamDomain::integer_grid(prefix + d.name(), d.int_values()));
        break;
      case ParamDomain::Kind::RealGrid:
        dims.push_back(ParamDomain::real_grid(prefix + d.name(), d.real_values()));
        break;
      case ParamDomain::Kind::Categorical:
        dims.push_back(ParamDomain::categorical(prefix + d.name(), d.categories()));
        break;
    }
  }
  return ConfigSpace(std::move(dims), s.conditions());
}

Phase initial_phase(const Policy& policy) {
  if (std::holds_alternative<JointPolicy>(policy)) return Phase::Joint;
  if (const SplitPolicy* s = std::get_if<SplitPolicy>(&policy); s && s->omega >= 1.0)
    return Phase::Algorithm;
  return Phase::Pipeline;
}

struct Runner {
  const Objective& obj;
  const RunOptions& opts;
  BudgetClock clock;
  std::uint64_t seed;

  Rng suggest_rng;
  RunReport report;
  History pipe_history;
  History algo_history;
  History joint_history;
  ConfigSpace union_sp;

  Configuration best_pipe;
  Configuration best_algo;
  double best_loss = std::numeric_limits<double>::infinity();
  double best_acc = 0.0;
  std::size_t best_index = 0;

  std::size_t eval_count = 0;
  std::size_t inner_loops = 0;
  double baseline_charge[3] = {0.0, 0.0, 0.0};

  Runner(const Objective& o, const RunOptions& op, BudgetClock c, std::uint64_t s)
      : obj(o), opts(op), clock(c), seed(s), suggest_rng(derive_seed(s, 0x5ACCE55ULL)) {}

  std::uint64_t eval_seed() const { return derive_seed(seed, 0xE0000000ULL + eval_count); }

  double take_baseline_charge(Phase phase) {
    double amount = baseline_charge[static_cast<int>(phase)];
    baseline_charge[static_cast<int>(phase)] = 0.0;
    return amount;
  }

  double record(Phase phase, const Configuration& pipe, const Configuration& algo,
                const Evaluation& ev, const std::string& fingerprint) {
    // wall-mode charges are floored so a zero-duration evaluation still
    // consumes budget and the policy loops always make progress
    const double amount =
        clock.mode() == BudgetMode::EvalCount ? 1.0 : std::max(ev.wall_seconds, 1e-9);
    clock.charge(phase, amount);
    TraceEntry e;
    e.eval_index = eval_count++;
    e.phase = phase;
    e.clock = clock.consumed();
    e.pipeline_config = pipe;
    e.algo_config = algo;
    e.loss = ev.loss;
    e.accuracy = ev.incompatible() ? 0.0 : ev.mean_accuracy;
    e.incompatibility = ev.incompatibility;
    e.fingerprint = fingerprint;
    if (std::isfinite(ev.loss) && ev.loss < best_loss) {
      best_loss = ev.loss;
      best_acc = ev.mean_accuracy;
      best_pipe = pipe;
      best_algo = algo;
      best_index = e.eval_index;
    }
    report.trace.push_back(std::move(e));
    return amount;
  }

  void run_baseline(Phase phase) {
    best_pipe = obj.baseline_pipeline;
    best_algo = obj.baseline_algo;
    Evaluation ev = obj.evaluate(obj.baseline_pipeline, obj.baseline_algo, eval_seed());
    double amount = record(phase, obj.baseline_pipeline, obj.baseline_algo, ev, "");
    baseline_charge[static_cast<int>(phase)] = amount;
    pipe_history.observe(Trial{obj.baseline_pipeline, ev.loss, phase, clock.consumed(), 0});
    algo_history.observe(Trial{obj.baseline_algo, ev.loss, phase, clock.consumed(), 0});
    if (phase == Phase::Joint)
      joint_history.observe(
          Trial{encode_joint(obj.baseline_pipeline, obj.baseline_algo), ev.loss, phase,
                clock.consumed(), 0});
  }

  void pipeline_slice(double budget) {
    if (budget <= 0.0 || clock.exhausted()) return;
    SliceRecord rec{Phase::Pipeline, budget, 0, false};
    const double mark = best_loss;
    double used = take_baseline_charge(Phase::Pipeline);
    if (used > 0.0) ++rec.trials;  // the baseline belongs to this slice
    while (used < budget && !clock.exhausted()) {
      Configuration gamma =
          opts.pipeline_optimizer.suggest(obj.pipeline_space, pipe_history, suggest_rng);
      Evaluation ev = obj.evaluate(gamma, best_algo, eval_seed());
      double amount = record(Phase::Pipeline, gamma, best_algo, ev, "");
      pipe_history.observe(Trial{gamma, ev.loss, Phase::Pipeline, clock.consumed(), 0});
      used += amount;
      ++rec.trials;
    }
    rec.improved = best_loss < mark;
    report.slices.push_back(rec);
  }

  // The inner loop: one pipeline transforms the whole dataset, the prior
  // configuration is evaluated first, then suggestions until the slice is
  // spent or the best-score sequence moves by less than epsilon.
  void algorithm_slice(double budget) {
    if (budget <= 0.0 || clock.exhausted()) return;
    SliceRecord rec{Phase::Algorithm, budget, 0, false};
    const double mark = best_loss;
    double used = take_baseline_charge(Phase::Algorithm);
    TransformedData data = obj.transform(best_pipe, derive_seed(seed, 0x7A000000ULL + inner_loops));
    ++inner_loops;
    const Configuration pipe_at_entry = best_pipe;

    double local_best = std::numeric_limits<double>::infinity();
    std::size_t k = 0;
    if (used > 0.0) {
      // An absorbed baseline already evaluated the prior configuration; it
      // counts as this inner loop's first step.
      ++rec.trials;
      k = 1;
      local_best = report.trace.front().loss;
    }
    while (used < budget && !clock.exhausted()) {
      Configuration lambda =
          k == 0 ? best_algo : opts.algo_optimizer.suggest(obj.algo_space, algo_history, suggest_rng);
      Evaluation ev = obj.evaluate_on(data, lambda, eval_seed());
      double amount = record(Phase::Algorithm, pipe_at_entry, lambda, ev, data.fingerprint);
      algo_history.observe(Trial{lambda, ev.loss, Phase::Algorithm, clock.consumed(), 0});
      used += amount;
      ++rec.trials;
      ++k;
      const double previous = local_best;
      local_best = std::min(local_best, ev.loss);
      if (k >= 2) {
        const double diff = (std::isinf(local_best) && std::isinf(previous))
                                ? 0.0
                                : std::abs(local_best - previous);
        if (diff < opts.cauchy_epsilon) break;
      }
    }
    rec.improved = best_loss < mark;
    report.slices.push_back(rec);
  }

  Configuration encode_joint(const Configuration& pipe, const Configuration& algo) const {
    std::vector<std::optional<Value>> values;
    values.reserve(union_sp.dim_count());
    for (std::size_t d = 0; d < pipe.dim_count(); ++d) values.push_back(pipe.maybe_value(d));
    for (std::size_t d = 0; d < algo.dim_count(); ++d) values.push_back(algo.maybe_value(d));
    return Configuration(union_sp.id(), std::move(values));
  }

  std::pair<Configuration, Configuration> decode_joint(const Configuration& u) const {
    const std::size_t p = obj.pipeline_space.dim_count();
    std::vector<std::optional<Value>> pv, av;
    for (std::size_t d = 0; d < p; ++d) pv.push_back(u.maybe_value(d));
    for (std::size_t d = p; d < u.dim_count(); ++d) av.push_back(u.maybe_value(d));
    return {Configuration(obj.pipeline_space.id(), std::move(pv)),
            Configuration(obj.algo_space.id(), std::move(av))};
  }

  void joint_loop() {
    SliceRecord rec{Phase::Joint, clock.total(), 0, false};
    const double mark = best_loss;
    if (take_baseline_charge(Phase::Joint) > 0.0) ++rec.trials;
    while (!clock.exhausted()) {
      Configuration u = opts.pipeline_optimizer.suggest(union_sp, joint_history, suggest_rng);
      auto [gamma, lambda] = decode_joint(u);
      Evaluation ev = obj.evaluate(gamma, lambda, eval_seed());
      record(Phase::Joint, gamma, lambda, ev, "");
      joint_history.observe(Trial{std::move(u), ev.loss, Phase::Joint, clock.consumed(), 0});
      ++rec.trials;
    }
    rec.improved = best_loss < mark;
    report.slices.push_back(rec);
  }

  void run(const Policy& policy) {
    if (std::holds_alternative<JointPolicy>(policy)) union_sp = joint_space(obj);
    run_baseline(initial_phase(policy));

    if (const SplitPolicy* s = std::get_if<SplitPolicy>(&policy)) {
      auto [t1, t2] = split_schedule(s->omega, clock.total(), clock.mode());
      pipeline_slice(t1);
      algorithm_slice(t2);
    } else if (const IterativePolicy* it = std::get_if<IterativePolicy>(&policy)) {
      if (it->slice <= 0.0) throw std::invalid_argument("iterative slice must be positive");
      Phase phase = Phase::Pipeline;
      while (!clock.exhausted()) {
        if (phase == Phase::Pipeline)
          pipeline_slice(it->slice);
        else
          algorithm_slice(it->slice);
        phase = phase == Phase::Pipeline ? Phase::Algorithm : Phase::Pipeline;
      }
    } else if (const AdaptivePolicy* ad = std::get_if<AdaptivePolicy>(&policy)) {
      if (ad->initial_slice <= 0.0) throw std::invalid_argument("adaptive slice must be positive");
      AdaptiveState state;
      state.pipeline_slice = state.algorithm_slice = ad->initial_slice;
      state.min_slice = ad->initial_slice / 8.0;
      state.max_slice = clock.total();
      Phase phase = Phase::Pipeline;
      while (!clock.exhausted()) {
        const std::size_t before = report.slices.size();
        if (phase == Phase::Pipeline)
          pipeline_slice(state.pipeline_slice);
        else
          algorithm_slice(state.algorithm_slice);
        if (report.slices.size() > before)
          state = adaptive_update(state, phase, report.slices.back().improved);
        phase = phase == Phase::Pipeline ? Phase::Algorithm : Phase::Pipeline;
      }
    } else {
      joint_loop();
    }

    report.best_index = best_index;
    report.best_loss = best_loss;
    report.best_accuracy = best_acc;
    report.best_pipeline = best_pipe;
    report.best_algo = best_algo;
    report.pipeline_consumed = clock.phase_consumed(Phase::Pipeline);
    report.algorithm_consumed = clock.phase_consumed(Phase::Algorithm);
    report.joint_consumed = clock.phase_consumed(Phase::Joint);
    report.total_consumed = clock.consumed();
  }
};

}  // namespace

ConfigSpace joint_space(const Objective& objective) {
  return union_space(prefix_space(objective.pipeline_space, "pipeline."),
                     prefix_space(objective.algo_space, "algo."));
}

Objective make_ml_objective(std::shared_ptr<const MlObjectiveSetup> setup) {
  if (!setup || !setup->prototype) throw std::invalid_argument("objective setup is incomplete");
  Objective obj;
  obj.pipeline_space = pipeline_space(*setup->prototype, setup->catalog);
  obj.algo_space = setup->learner.space;

  std::vector<std::optional<Value>> empty(obj.pipeline_space.dim_count());
  for (const PrototypeLayer& layer : setup->prototype->layers())
    for (const std::string& slot : layer.slots)
      empty[obj.pipeline_space.dim_index(slot)] = Value(std::string(kEmptySlot));
  obj.baseline_pipeline = obj.pipeline_space.make(std::move(empty));
  obj.baseline_algo = setup->learner.default_config;

  const ConfigSpace pipe_space = obj.pipeline_space;
  obj.evaluate = [setup, pipe_space](const Configuration& pipe, const Configuration& algo,
                                     std::uint64_t eval_seed) {
    PipelineInstance inst = instantiate(setup->prototype, setup->catalog, pipe_space, pipe);
    CompatibilityReport compat = check_compatibility(inst, setup->catalog);
    if (!compat.ok) {
      Evaluation ev;
      ev.incompatibility = "static: edge " + compat.issue->from + " -> " + compat.issue->to +
                           " produces " + to_string(compat.issue->produced.tag) + ", expects " +
                           to_string(compat.issue->expected.tag);
      return ev;
    }
    return cross_val_score(inst, setup->catalog, setup->learner, algo, setup->dataset,
                           setup->cv_folds, eval_seed);
  };
  obj.transform = [setup, pipe_space](const Configuration& pipe, std::uint64_t seed) {
    try {
      PipelineInstance inst = instantiate(setup->prototype, setup->catalog, pipe_space, pipe);
      Rng rng(seed);
      PipelineFit fit =
          fit_transform(inst, setup->catalog, setup->dataset.features, setup->dataset.labels, rng);
      TransformedData out;
      out.fingerprint = matrix_fingerprint(fit.features, fit.labels);
      out.features = std::move(fit.features);
      out.labels = std::move(fit.labels);
      return out;
    } catch (const RuntimeIncompatibility&) {
      // The incumbent pipeline scored finite during search, so this is a
      // full-data edge case; fall back to the raw dataset for the slice.
      TransformedData out;
      out.features = setup->dataset.features;
      out.labels = setup->dataset.labels;
      out.fingerprint = matrix_fingerprint(out.features, out.labels);
      return out;
    }
  };
  obj.evaluate_on = [setup](const TransformedData& data, const Configuration& algo,
                            std::uint64_t eval_seed) {
    return cross_val_algo(data.features, data.labels, setup->learner, algo, setup->cv_folds,
                          eval_seed);
  };
  return obj;
}

RunReport run_policy(const Objective& objective, const Policy& policy, BudgetClock clock,
                     const RunOptions& options, std::uint64_t seed) {
  Runner runner(objective, options, clock, seed);
  runner.report.policy = policy_descriptor(policy);
  runner.report.budget_mode = clock.mode();
  runner.report.budget_total = clock.total();
  runner.report.cauchy_epsilon = options.cauchy_epsilon;
  runner.report.seed = seed;
  runner.run(policy);
  return runner.report;
}

}  // namespace flowtune
