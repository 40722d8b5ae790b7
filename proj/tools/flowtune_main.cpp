#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "flowtune/experiment.hpp"

namespace fs = std::filesystem;
using namespace flowtune;

namespace {

struct CommonArgs {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> budget_mode;
  std::optional<double> budget_total;
};

void apply_overrides(ExperimentConfig& exp, const CommonArgs& args) {
  if (args.seed) exp.seed = *args.seed;
  if (args.budget_mode) exp.budget_mode = budget_mode_from_string(*args.budget_mode);
  if (args.budget_total) exp.budget_total = *args.budget_total;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--out", args.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", args.seed, "Override the experiment seed");
  cmd->add_option("--budget-mode", args.budget_mode, "Budget mode: wall or evals")
      ->check(CLI::IsMember({"wall", "evals"}));
  cmd->add_option("--budget", args.budget_total, "Override the budget total");
}

std::string out_path(const CommonArgs& args, const std::string& file) {
  fs::create_directories(args.out_dir);
  return (fs::path(args.out_dir) / file).string();
}

int cmd_run(const std::string& exp_path, const CommonArgs& args) {
  ExperimentConfig exp = load_experiment(exp_path);
  apply_overrides(exp, args);
  Objective obj = make_objective(exp);
  RunOptions options{exp.make_optimizer(), exp.make_optimizer(), exp.cauchy_epsilon};
  RunReport report = run_policy(obj, exp.policy, BudgetClock(exp.budget_mode, exp.budget_total),
                                options, exp.seed);

  write_trace_jsonl(out_path(args, "trace.jsonl"), report, obj.pipeline_space, obj.algo_space);
  write_run_summary(out_path(args, "summary.json"), report, obj.pipeline_space, obj.algo_space);
  std::cout << report.policy << " seed=" << report.seed << " trials=" << report.trace.size()
            << " best_accuracy=" << report.best_accuracy << " best_pipeline="
            << config_to_json(obj.pipeline_space, report.best_pipeline).dump() << "\n";
  return 0;
}

int cmd_density(const std::string& exp_path, const CommonArgs& args, bool exhaustive,
                std::uint64_t budget) {
  ExperimentConfig exp = load_experiment(exp_path);
  apply_overrides(exp, args);
  DensityResult result = density_study(exp, exhaustive, budget);
  write_density_csv(out_path(args, "density.csv"), result);
  std::cout << (exhaustive ? "exhaustive" : "budgeted") << " rows=" << result.rows.size()
            << " baseline=" << result.baseline_accuracy << " best=" << result.best_accuracy
            << " first_improvement=" << result.evals_to_first_improvement
            << " evals_to_best=" << result.evals_to_best << "\n";
  return 0;
}

int cmd_compare(const std::string& exp_path, const CommonArgs& args,
                const std::vector<std::string>& policy_args,
                const std::vector<std::uint64_t>& seeds) {
  ExperimentConfig exp = load_experiment(exp_path);
  apply_overrides(exp, args);
  std::vector<Policy> policies;
  for (const std::string& p : policy_args) policies.push_back(parse_policy(p));
  std::vector<std::uint64_t> run_seeds = seeds.empty() ? std::vector<std::uint64_t>{exp.seed}
                                                       : seeds;

  Objective obj = make_objective(exp);
  std::vector<CompareRun> runs = policy_compare(exp, policies, run_seeds);
  for (const CompareRun& run : runs) {
    const std::string base = policy_slug(run.policy) + "_" + std::to_string(run.seed);
    write_trace_jsonl(out_path(args, "trace_" + base + ".jsonl"), run.report, obj.pipeline_space,
                      obj.algo_space);
    write_run_summary(out_path(args, "summary_" + base + ".json"), run.report, obj.pipeline_space,
                      obj.algo_space);
    std::cout << run.report.policy << " seed=" << run.seed
              << " visited=" << run.report.trace.size()
              << " best_accuracy=" << run.report.best_accuracy << "\n";
  }
  write_compare_csv(out_path(args, "compare.csv"), runs);
  return 0;
}

int cmd_nmad(const std::string& fixture_path, const CommonArgs& args, bool write_json) {
  OptimalSet set = load_optimal_set(fixture_path);
  NmadReport report = nmad_report(set);
  std::cout << render_nmad_table(report, set.space);
  if (write_json) {
    std::ofstream out(out_path(args, "nmad.json"), std::ios::binary);
    out << nmad_report_to_json(report, set.space).dump(2) << "\n";
  }
  return 0;
}

int cmd_space(const std::string& exp_path) {
  ExperimentConfig exp = load_experiment(exp_path);
  ConfigSpace pipe_space = pipeline_space(*exp.prototype, exp.catalog);
  std::cout << "pipeline space: " << pipe_space.cardinality() << " configurations\n";
  for (const PrototypeLayer& layer : exp.prototype->layers()) {
    std::uint64_t options = 1;  // the empty slot
    for (const std::string& op : layer.catalog) {
      std::uint64_t grid = exp.catalog.get(op).param_cardinality();
      options += grid == 0 ? 1 : grid;
    }
    std::cout << "  layer " << layer.name << ": " << options << " options\n";
  }
  std::cout << "algorithm space (" << to_string(exp.learner.kind)
            << "): " << exp.learner.space.cardinality() << " configurations\n";
  std::cout << "joint space: " << pipe_space.cardinality() * exp.learner.space.cardinality()
            << " configurations\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage ML workflow optimization: pipeline search, algorithm tuning, "
               "budget policies, and configuration-universality reports"};
  app.require_subcommand(1);

  std::string exp_path, fixture_path;
  CommonArgs args;
  bool exhaustive = false;
  bool nmad_json = false;
  std::uint64_t budget_evals = 100;
  std::vector<std::string> policy_args;
  std::vector<std::uint64_t> seeds;

  CLI::App* run = app.add_subcommand("run", "Run one experiment end to end");
  run->add_option("experiment", exp_path, "Experiment JSON file")->required();
  add_common(run, args);

  CLI::App* density = app.add_subcommand("density", "Score pipeline or algorithm configurations");
  density->add_option("experiment", exp_path, "Experiment JSON file")->required();
  CLI::Option* opt_ex = density->add_flag("--exhaustive", exhaustive, "Score every configuration");
  density->add_option("--budget", budget_evals, "Optimizer trials beyond the baseline")
      ->excludes(opt_ex);
  density->add_option("--out", args.out_dir, "Output directory")->capture_default_str();
  density->add_option("--seed", args.seed, "Override the experiment seed");

  CLI::App* compare = app.add_subcommand("compare", "Run policies across seeds");
  compare->add_option("experiment", exp_path, "Experiment JSON file")->required();
  compare->add_option("--policies", policy_args, "Policies, e.g. split:0.5 iterative:15 joint")
      ->required()
      ->delimiter(',');
  compare->add_option("--seeds", seeds, "Seeds, one run per (policy, seed)")->delimiter(',');
  add_common(compare, args);

  CLI::App* nmad_cmd = app.add_subcommand("nmad", "Rank optimal configurations by universality");
  nmad_cmd->add_option("fixture", fixture_path, "Optimal-set fixture JSON")->required();
  nmad_cmd->add_flag("--json", nmad_json, "Also write nmad.json");
  nmad_cmd->add_option("--out", args.out_dir, "Output directory")->capture_default_str();

  CLI::App* space = app.add_subcommand("space", "Print search-space cardinalities");
  space->add_option("experiment", exp_path, "Experiment JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(exp_path, args);
    if (density->parsed()) {
      // --budget without --exhaustive is the default mode.
      bool has_budget = density->count("--budget") > 0;
      if (!exhaustive && !has_budget) exhaustive = true;
      return cmd_density(exp_path, args, exhaustive, budget_evals);
    }
    if (compare->parsed()) return cmd_compare(exp_path, args, policy_args, seeds);
    if (nmad_cmd->parsed()) return cmd_nmad(fixture_path, args, nmad_json);
    if (space->parsed()) return cmd_space(exp_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
