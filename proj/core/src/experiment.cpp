#include "flowtune/experiment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace flowtune {

ExperimentConfig experiment_from_json(const Json& j) {
  ExperimentConfig exp;
  exp.schema = j.value("schema", 1);
  if (exp.schema != 1)
    throw std::invalid_argument("unsupported experiment schema " + std::to_string(exp.schema));

  if (j.contains("dataset")) {
    if (j.at("dataset").is_string()) {
      exp.dataset_ref = j.at("dataset").get<std::string>();
    } else {
      exp.dataset_ref = j.at("dataset").at("csv").get<std::string>();
      exp.label_column = j.at("dataset").value("label_column", "label");
    }
  }

  exp.catalog = default_catalog();
  if (j.contains("prototype") && j.at("prototype").is_object())
    exp.prototype = prototype_from_json(j.at("prototype"));
  else
    exp.prototype = default_prototype();

  LearnerKind kind = LearnerKind::DecisionTree;
  if (j.contains("learner")) {
    const Json& lj = j.at("learner");
    kind = learner_kind_from_string(lj.at("kind").get<std::string>());
    if (lj.contains("space")) {
      ConfigSpace space = space_from_json(lj.at("space"));
      Configuration def = lj.contains("default")
                              ? config_from_json(space, lj.at("default"))
                              : space.at(0);
      exp.learner = make_learner_spec(kind, std::move(space), std::move(def));
    } else {
      exp.learner = make_learner_spec(kind);
    }
  } else {
    exp.learner = make_learner_spec(kind);
  }

  if (j.contains("optimizer")) {
    const Json& oj = j.at("optimizer");
    exp.optimizer_kind = optimizer_kind_from_string(oj.value("kind", "tpe"));
    exp.tpe.good_quantile = oj.value("good_quantile", exp.tpe.good_quantile);
    exp.tpe.candidates = oj.value("candidates", exp.tpe.candidates);
    exp.tpe.min_history = oj.value("min_history", exp.tpe.min_history);
  }

  if (j.contains("policy")) {
    const Json& pj = j.at("policy");
    const std::string kind_s = pj.at("kind").get<std::string>();
    if (kind_s == "split")
      exp.policy = SplitPolicy{pj.value("omega", 0.5)};
    else if (kind_s == "iterative")
      exp.policy = IterativePolicy{pj.value("slice", 15.0)};
    else if (kind_s == "adaptive")
      exp.policy = AdaptivePolicy{pj.value("slice", 15.0)};
    else if (kind_s == "joint")
      exp.policy = JointPolicy{};
    else
      throw std::invalid_argument("unknown policy kind '" + kind_s + "'");
    if (pj.contains("epsilon")) {
      if (pj.at("epsilon").is_string()) {
        if (pj.at("epsilon").get<std::string>() != "inf")
          throw std::invalid_argument("epsilon must be a number or \"inf\"");
        exp.cauchy_epsilon = std::numeric_limits<double>::infinity();
      } else {
        exp.cauchy_epsilon = pj.at("epsilon").get<double>();
      }
    }
  }

  if (j.contains("budget")) {
    exp.budget_mode = budget_mode_from_string(j.at("budget").value("mode", "evals"));
    exp.budget_total = j.at("budget").at("total").get<double>();
  }
  exp.cv_folds = j.value("cv_folds", 10);
  exp.seed = j.value("seed", std::uint64_t{0});
  exp.density_target = j.value("density_target", "pipeline");
  if (exp.density_target != "pipeline" && exp.density_target != "algorithm")
    throw std::invalid_argument("density_target must be 'pipeline' or 'algorithm'");
  return exp;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment file '" + path + "'");
  Json j;
  in >> j;
  return experiment_from_json(j);
}

Policy parse_policy(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "joint") return JointPolicy{};
  if (kind == "split") return SplitPolicy{arg.empty() ? 0.5 : std::stod(arg)};
  if (kind == "iterative") return IterativePolicy{arg.empty() ? 15.0 : std::stod(arg)};
  if (kind == "adaptive") return AdaptivePolicy{arg.empty() ? 15.0 : std::stod(arg)};
  throw std::invalid_argument("unknown policy '" + text + "'");
}

namespace {

std::string trim_number(double v) {
  std::ostringstream os;
  os << v;
  std::string s = os.str();
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

}  // namespace

std::string policy_slug(const Policy& policy) {
  struct Visitor {
    std::string operator()(const SplitPolicy& s) const { return "split_" + trim_number(s.omega); }
    std::string operator()(const IterativePolicy& s) const {
      return "iterative_" + trim_number(s.slice);
    }
    std::string operator()(const AdaptivePolicy& s) const {
      return "adaptive_" + trim_number(s.initial_slice);
    }
    std::string operator()(const JointPolicy&) const { return "joint"; }
  };
  return std::visit(Visitor{}, policy);
}

Objective make_objective(const ExperimentConfig& exp) {
  auto setup = std::make_shared<MlObjectiveSetup>();
  setup->prototype = exp.prototype;
  setup->catalog = exp.catalog;
  setup->learner = exp.learner;
  setup->dataset = load_dataset(exp.dataset_ref, exp.label_column);
  setup->cv_folds = exp.cv_folds;
  return make_ml_objective(std::move(setup));
}

RunReport run_experiment(const ExperimentConfig& exp) {
  Objective obj = make_objective(exp);
  RunOptions options{exp.make_optimizer(), exp.make_optimizer(), exp.cauchy_epsilon};
  return run_policy(obj, exp.policy, BudgetClock(exp.budget_mode, exp.budget_total), options,
                    exp.seed);
}

DensityResult density_study(const ExperimentConfig& exp, bool exhaustive, std::uint64_t budget) {
  Objective obj = make_objective(exp);
  const bool pipeline_target = exp.density_target == "pipeline";
  DensityResult result;
  result.space = pipeline_target ? obj.pipeline_space : obj.algo_space;
  result.exhaustive = exhaustive;
  if (exhaustive && result.space.cardinality() > kExhaustiveGuard)
    throw std::invalid_argument(
        "space has " + std::to_string(result.space.cardinality()) +
        " configurations, above the exhaustive guard; use a budgeted run instead");

  auto evaluate = [&](const Configuration& c, std::uint64_t eval_seed) {
    return pipeline_target ? obj.evaluate(c, obj.baseline_algo, eval_seed)
                           : obj.evaluate(obj.baseline_pipeline, c, eval_seed);
  };

  Evaluation baseline = obj.evaluate(obj.baseline_pipeline, obj.baseline_algo,
                                     derive_seed(exp.seed, 0xBA5E));
  result.baseline_accuracy = baseline.incompatible() ? 0.0 : baseline.mean_accuracy;
  result.best_accuracy = result.baseline_accuracy;

  auto push = [&](std::size_t index, Configuration config, const Evaluation& ev) {
    DensityRow row;
    row.index = index;
    row.config = std::move(config);
    row.incompatible = ev.incompatible();
    row.loss = ev.loss;
    row.accuracy = row.incompatible ? 0.0 : ev.mean_accuracy;
    if (!row.incompatible) {
      if (row.accuracy > result.baseline_accuracy && result.evals_to_first_improvement < 0)
        result.evals_to_first_improvement = static_cast<long long>(index) + 1;
      if (row.accuracy > result.best_accuracy) {
        result.best_accuracy = row.accuracy;
        result.evals_to_best = static_cast<long long>(index) + 1;
      }
    }
    result.rows.push_back(std::move(row));
  };

  if (exhaustive) {
    ConfigEnumerator en(result.space);
    std::size_t index = 0;
    while (auto c = en.next()) {
      Evaluation ev = evaluate(*c, derive_seed(exp.seed, index));
      push(index, std::move(*c), ev);
      ++index;
    }
  } else {
    // Trial 0 is the baseline; `budget` optimizer trials follow.
    Optimizer optimizer = exp.make_optimizer();
    History history;
    Rng rng(derive_seed(exp.seed, 0xD5EED));
    const Configuration& baseline_config =
        pipeline_target ? obj.baseline_pipeline : obj.baseline_algo;
    push(0, baseline_config, baseline);
    history.observe(Trial{baseline_config, baseline.loss, Phase::Pipeline, 0.0, 0});
    for (std::uint64_t i = 1; i <= budget; ++i) {
      Configuration c = optimizer.suggest(result.space, history, rng);
      Evaluation ev = evaluate(c, derive_seed(exp.seed, i));
      history.observe(Trial{c, ev.loss, Phase::Pipeline, static_cast<double>(i), 0});
      push(static_cast<std::size_t>(i), std::move(c), ev);
    }
    // Indices are 1-based beyond the baseline already; undo the +1 shift
    // applied by push for the baseline-relative interval.
    if (result.evals_to_first_improvement > 0) --result.evals_to_first_improvement;
    if (result.evals_to_best > 0) --result.evals_to_best;
  }
  return result;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void write_density_csv(const std::string& path, const DensityResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "index,config,loss,accuracy,incompatible\r\n";
  for (const DensityRow& row : result.rows) {
    Json cfg = config_to_json(result.space, row.config);
    out << row.index << "," << csv_escape(cfg.dump()) << "," << format_double(row.loss) << ","
        << format_double(row.accuracy) << "," << (row.incompatible ? 1 : 0) << "\r\n";
  }
}

std::vector<CompareRun> policy_compare(const ExperimentConfig& exp,
                                       const std::vector<Policy>& policies,
                                       const std::vector<std::uint64_t>& seeds) {
  Objective obj = make_objective(exp);
  std::vector<CompareRun> runs;
  for (const Policy& policy : policies) {
    for (std::uint64_t seed : seeds) {
      RunOptions options{exp.make_optimizer(), exp.make_optimizer(), exp.cauchy_epsilon};
      CompareRun run;
      run.policy = policy;
      run.seed = seed;
      run.report = run_policy(obj, policy, BudgetClock(exp.budget_mode, exp.budget_total),
                              options, seed);
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

void write_trace_jsonl(const std::string& path, const RunReport& report,
                       const ConfigSpace& pipeline_space, const ConfigSpace& algo_space) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (const TraceEntry& e : report.trace)
    out << trace_entry_to_json(e, pipeline_space, algo_space).dump() << "\n";
}

void write_run_summary(const std::string& path, const RunReport& report,
                       const ConfigSpace& pipeline_space, const ConfigSpace& algo_space) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << run_report_to_json(report, pipeline_space, algo_space).dump(2) << "\n";
}

void write_compare_csv(const std::string& path, const std::vector<CompareRun>& runs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "policy,seed,eval,clock,best_accuracy,visited\r\n";
  for (const CompareRun& run : runs) {
    double best = 0.0;
    for (const TraceEntry& e : run.report.trace) {
      if (std::isfinite(e.loss)) best = std::max(best, e.accuracy);
      out << csv_escape(run.report.policy) << "," << run.seed << "," << e.eval_index << ","
          << format_double(e.clock) << "," << format_double(best) << ","
          << run.report.trace.size() << "\r\n";
    }
  }
}

TraceCheck replay_trace_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace '" + path + "'");
  TraceCheck check;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line);
    const double loss = j.at("loss").is_null() ? std::numeric_limits<double>::infinity()
                                               : j.at("loss").get<double>();
    if (loss < check.best_loss) {
      check.best_loss = loss;
      check.best_index = j.at("eval").get<std::size_t>();
    }
    ++check.trials;
  }
  return check;
}

}  // namespace flowtune
