#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "test_support.hpp"

using namespace flowtune;
using flowtune::testing::make_synthetic_objective;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// smooth synthetic loss with a unique optimum at (6, 9)
double bowl(int p, int a) {
  return 0.01 * ((p - 6) * (p - 6) + (a - 9) * (a - 9)) + 0.05;
}

RunReport run(const Objective& obj, Policy policy, double total, double epsilon = 0.0,
              std::uint64_t seed = 1, Optimizer::Kind kind = Optimizer::Kind::Random) {
  RunOptions opts{Optimizer(kind), Optimizer(kind), epsilon};
  return run_policy(obj, policy, BudgetClock(BudgetMode::EvalCount, total), opts, seed);
}

}  // namespace

TEST_CASE("split_schedule") {
  CHECK(split_schedule(0.0, 300, BudgetMode::EvalCount) == std::pair{300.0, 0.0});
  CHECK(split_schedule(0.5, 300, BudgetMode::EvalCount) == std::pair{150.0, 150.0});
  CHECK(split_schedule(1.0, 300, BudgetMode::EvalCount) == std::pair{0.0, 300.0});
  auto [t1, t2] = split_schedule(0.3, 300.0, BudgetMode::WallSeconds);
  CHECK(t1 == doctest::Approx(210.0));
  CHECK(t2 == doctest::Approx(90.0));
  CHECK_THROWS_AS(split_schedule(1.5, 300, BudgetMode::EvalCount), std::invalid_argument);
}

TEST_CASE("adaptive_update automaton") {
  AdaptiveState s;
  s.pipeline_slice = s.algorithm_slice = 15.0;
  s.min_slice = 15.0 / 8.0;
  s.max_slice = 300.0;

  SUBCASE("improvement doubles the slice") {
    AdaptiveState n = adaptive_update(s, Phase::Pipeline, true);
    CHECK(n.pipeline_slice == 30.0);
    CHECK(n.pipeline_no_improve == 0);
    CHECK(n.algorithm_slice == 15.0);  // other phase untouched
  }
  SUBCASE("two misses halve the slice") {
    AdaptiveState n = adaptive_update(adaptive_update(s, Phase::Pipeline, false),
                                      Phase::Pipeline, false);
    CHECK(n.pipeline_slice == 7.5);
    CHECK(n.pipeline_no_improve == 0);
  }
  SUBCASE("miss then improvement doubles and resets the counter") {
    AdaptiveState n = adaptive_update(adaptive_update(s, Phase::Pipeline, false),
                                      Phase::Pipeline, true);
    CHECK(n.pipeline_slice == 30.0);
    CHECK(n.pipeline_no_improve == 0);
  }
  SUBCASE("bounds: never below min_slice, never above max_slice") {
    AdaptiveState n = s;
    for (int i = 0; i < 20; ++i) n = adaptive_update(n, Phase::Algorithm, false);
    CHECK(n.algorithm_slice == doctest::Approx(15.0 / 8.0));
    for (int i = 0; i < 20; ++i) n = adaptive_update(n, Phase::Algorithm, true);
    CHECK(n.algorithm_slice == doctest::Approx(300.0));
  }
  SUBCASE("replay of 1000 random improvement sequences against a straight-line simulation") {
    Rng rng(33);
    for (int trial = 0; trial < 1000; ++trial) {
      AdaptiveState state;
      state.pipeline_slice = state.algorithm_slice = 15.0;
      state.min_slice = 15.0 / 8.0;
      state.max_slice = 300.0;
      // independent simulation of one phase's slice variable
      double sim_slice = 15.0;
      int sim_misses = 0;
      for (int step = 0; step < 24; ++step) {
        bool improved = bounded_uint(rng, 2) == 0;
        state = adaptive_update(state, Phase::Pipeline, improved);
        if (improved) {
          sim_slice = std::min(sim_slice * 2.0, 300.0);
          sim_misses = 0;
        } else if (++sim_misses == 2) {
          sim_slice = std::max(sim_slice / 2.0, 15.0 / 8.0);
          sim_misses = 0;
        }
        REQUIRE(state.pipeline_slice == doctest::Approx(sim_slice));
        REQUIRE(state.pipeline_no_improve == sim_misses);
      }
    }
  }
}

TEST_CASE("baseline is always trial 0 and budget 1 yields baseline only") {
  Objective obj = make_synthetic_objective(8, 8, bowl);
  for (Policy policy : std::vector<Policy>{SplitPolicy{0.5}, IterativePolicy{4},
                                           AdaptivePolicy{4}, JointPolicy{}}) {
    RunReport r = run(obj, policy, 1);
    REQUIRE(r.trace.size() == 1);
    CHECK(r.trace[0].eval_index == 0);
    CHECK(r.trace[0].pipeline_config == obj.baseline_pipeline);
    CHECK(r.trace[0].algo_config == obj.baseline_algo);
    CHECK(r.best_index == 0);
    CHECK(r.total_consumed == 1.0);
  }
}

TEST_CASE("split policy ledgers") {
  Objective obj = make_synthetic_objective(8, 8, bowl);
  const double n = 24;

  SUBCASE("omega 0: everything to the pipeline phase") {
    RunReport r = run(obj, SplitPolicy{0.0}, n);
    CHECK(r.pipeline_consumed == n);
    CHECK(r.algorithm_consumed == 0.0);
    CHECK(r.trace.size() == static_cast<std::size_t>(n));
    for (const TraceEntry& e : r.trace) CHECK(e.phase == Phase::Pipeline);
  }
  SUBCASE("omega 1: everything to the algorithm phase, no pipeline trials at all") {
    RunReport r = run(obj, SplitPolicy{1.0}, n);
    CHECK(r.pipeline_consumed == 0.0);
    CHECK(r.algorithm_consumed == n);
    for (const TraceEntry& e : r.trace) CHECK(e.phase == Phase::Algorithm);
    // every algorithm trial shares the baseline pipeline's transform
    std::set<std::string> prints;
    for (const TraceEntry& e : r.trace)
      if (!e.fingerprint.empty()) prints.insert(e.fingerprint);
    CHECK(prints.size() == 1);
  }
  SUBCASE("ledger sums match total consumption for mid omegas") {
    for (double omega : {0.25, 0.5, 0.75}) {
      RunReport r = run(obj, SplitPolicy{omega}, n);
      CHECK(r.pipeline_consumed + r.algorithm_consumed + r.joint_consumed ==
            doctest::Approx(r.total_consumed));
      CHECK(r.total_consumed <= n);
      auto [t1, t2] = split_schedule(omega, n, BudgetMode::EvalCount);
      CHECK(r.pipeline_consumed == t1);
      CHECK(r.algorithm_consumed == t2);
    }
  }
}

TEST_CASE("iterative policy alternates phases strictly") {
  Objective obj = make_synthetic_objective(8, 8, bowl);
  RunReport r = run(obj, IterativePolicy{4}, 24);
  REQUIRE(!r.slices.empty());

  SUBCASE("slice phases alternate starting with the pipeline") {
    CHECK(r.slices[0].phase == Phase::Pipeline);
    for (std::size_t i = 1; i < r.slices.size(); ++i)
      CHECK(r.slices[i].phase != r.slices[i - 1].phase);
  }
  SUBCASE("collapsed trace phases alternate too") {
    std::vector<Phase> collapsed;
    for (const TraceEntry& e : r.trace)
      if (collapsed.empty() || collapsed.back() != e.phase) collapsed.push_back(e.phase);
    for (std::size_t i = 1; i < collapsed.size(); ++i)
      CHECK(collapsed[i] != collapsed[i - 1]);
  }
  SUBCASE("budget of exactly two slices gives one slice per phase") {
    RunReport two = run(obj, IterativePolicy{4}, 8);
    REQUIRE(two.slices.size() == 2);
    CHECK(two.slices[0].phase == Phase::Pipeline);
    CHECK(two.slices[0].trials == 4);  // baseline + 3
    CHECK(two.slices[1].phase == Phase::Algorithm);
    CHECK(two.slices[1].trials == 4);
    CHECK(two.trace.size() == 8);
  }
  SUBCASE("eval-count budget is exact") {
    CHECK(r.trace.size() == 24);
    CHECK(r.total_consumed == 24.0);
  }
}

TEST_CASE("inner-loop warm start and Cauchy stopping") {
  Objective obj = make_synthetic_objective(8, 12, bowl);

  SUBCASE("every algorithm slice starts from the incumbent best algo config") {
    RunReport r = run(obj, IterativePolicy{4}, 32, 0.0, 3);
    Configuration incumbent = obj.baseline_algo;
    double best = kInf;
    Phase prev = Phase::Pipeline;
    for (const TraceEntry& e : r.trace) {
      if (e.phase == Phase::Algorithm && prev != Phase::Algorithm)
        CHECK(e.algo_config == incumbent);  // first trial of the inner loop
      if (std::isfinite(e.loss) && e.loss < best) {
        best = e.loss;
        incumbent = e.algo_config;
      }
      prev = e.phase;
    }
  }
  SUBCASE("epsilon = +infinity stops every inner loop after two evaluations") {
    RunReport r = run(obj, IterativePolicy{6}, 36, kInf, 5);
    for (const SliceRecord& s : r.slices)
      if (s.phase == Phase::Algorithm) CHECK(s.trials == 2);
  }
  SUBCASE("slice of one evaluation returns the prior's score") {
    RunReport r = run(obj, IterativePolicy{1}, 3, 0.0, 7);
    REQUIRE(r.trace.size() == 3);
    CHECK(r.trace[1].phase == Phase::Algorithm);  // baseline absorbed slice 1
    CHECK(r.trace[1].algo_config == obj.baseline_algo);
  }
  SUBCASE("epsilon 0 disables the criterion") {
    RunReport r = run(obj, SplitPolicy{1.0}, 12, 0.0, 9);
    CHECK(r.trace.size() == 12);
  }
  SUBCASE("fingerprints are constant within each inner loop") {
    RunReport r = run(obj, IterativePolicy{5}, 40, 0.0, 11);
    std::string current;
    Phase prev = Phase::Pipeline;
    for (const TraceEntry& e : r.trace) {
      if (e.phase == Phase::Algorithm) {
        if (prev != Phase::Algorithm)
          current = e.fingerprint;
        else
          CHECK(e.fingerprint == current);
      }
      prev = e.phase;
    }
  }
}

TEST_CASE("adaptive policy slices follow the automaton") {
  Objective obj = make_synthetic_objective(10, 10, bowl);
  RunReport r = run(obj, AdaptivePolicy{4}, 60, 0.0, 13);
  REQUIRE(!r.slices.empty());
  CHECK(r.slices[0].budget == 4.0);

  // replay the recorded (phase, improved) sequence through adaptive_update
  AdaptiveState state;
  state.pipeline_slice = state.algorithm_slice = 4.0;
  state.min_slice = 0.5;
  state.max_slice = 60.0;
  for (const SliceRecord& s : r.slices) {
    double expected = s.phase == Phase::Pipeline ? state.pipeline_slice : state.algorithm_slice;
    CHECK(s.budget == doctest::Approx(expected));
    state = adaptive_update(state, s.phase, s.improved);
  }
}

TEST_CASE("joint policy searches the product space only") {
  Objective obj = make_synthetic_objective(6, 7, bowl);
  CHECK(joint_space(obj).cardinality() == 42);

  RunReport r = run(obj, JointPolicy{}, 20, 0.0, 17);
  CHECK(r.trace.size() == 20);
  for (const TraceEntry& e : r.trace) CHECK(e.phase == Phase::Joint);
  CHECK(r.joint_consumed == 20.0);
  CHECK(r.pipeline_consumed == 0.0);
  CHECK(r.best_loss <= r.trace[0].loss);  // baseline included in best tracking
}

TEST_CASE("best tracking") {
  SUBCASE("monotone best trace for every policy") {
    Objective obj = make_synthetic_objective(8, 8, bowl);
    for (Policy policy : std::vector<Policy>{SplitPolicy{0.5}, IterativePolicy{4},
                                             AdaptivePolicy{4}, JointPolicy{}}) {
      RunReport r = run(obj, policy, 30, 0.0, 19);
      double best = kInf;
      for (const TraceEntry& e : r.trace) {
        if (std::isfinite(e.loss)) best = std::min(best, e.loss);
        if (e.eval_index == r.best_index) CHECK(e.loss == r.best_loss);
      }
      CHECK(best == r.best_loss);
      // report best is at least as good as the baseline
      CHECK(r.best_loss <= r.trace[0].loss);
    }
  }
  SUBCASE("all-incompatible run returns the baseline") {
    Objective obj = make_synthetic_objective(4, 4, [](int, int) { return kInf; });
    RunReport r = run(obj, IterativePolicy{3}, 9);
    CHECK(r.best_index == 0);
    CHECK(std::isinf(r.best_loss));
    CHECK(r.best_pipeline == obj.baseline_pipeline);
    CHECK(r.best_algo == obj.baseline_algo);
  }
  SUBCASE("incompatible trials are recorded but never become best") {
    Objective obj = make_synthetic_objective(8, 8, [](int p, int a) {
      return p >= 4 ? kInf : bowl(p, a);
    });
    RunReport r = run(obj, SplitPolicy{0.0}, 40, 0.0, 23);
    bool saw_infinite = false;
    for (const TraceEntry& e : r.trace) {
      if (std::isinf(e.loss)) {
        saw_infinite = true;
        CHECK(!e.incompatibility.empty());
        CHECK(e.eval_index != r.best_index);
      }
    }
    CHECK(saw_infinite);
    CHECK(std::isfinite(r.best_loss));
  }
}

TEST_CASE("budget accounting invariants") {
  Objective obj = make_synthetic_objective(8, 8, bowl);
  for (Policy policy : std::vector<Policy>{SplitPolicy{0.3}, IterativePolicy{5},
                                           AdaptivePolicy{5}, JointPolicy{}}) {
    RunReport r = run(obj, policy, 33, 0.0, 29);
    CHECK(r.pipeline_consumed + r.algorithm_consumed + r.joint_consumed ==
          doctest::Approx(r.total_consumed));
    CHECK(r.trace.size() <= 33);
    CHECK(r.total_consumed <= 33.0);
    // clock readings are the consumed-so-far sequence 1..n
    for (std::size_t i = 0; i < r.trace.size(); ++i)
      CHECK(r.trace[i].clock == static_cast<double>(i + 1));
  }
}

TEST_CASE("iterative slice arithmetic: T = 20 t gives exactly 20 slices") {
  Objective obj = make_synthetic_objective(8, 8, bowl);
  RunReport r = run(obj, IterativePolicy{15}, 300, 0.0, 37);
  CHECK(r.slices.size() == 20);
  for (const SliceRecord& s : r.slices) CHECK(s.trials == 15);
  CHECK(r.trace.size() == 300);
}

TEST_CASE("wall-clock budgets terminate and account per phase") {
  Objective obj = make_synthetic_objective(8, 8, bowl);  // synthetic evals report 1ms
  RunOptions opts{Optimizer(Optimizer::Kind::Random), Optimizer(Optimizer::Kind::Random), 0.0};
  RunReport r = run_policy(obj, IterativePolicy{0.01}, BudgetClock(BudgetMode::WallSeconds, 0.05),
                           opts, 41);
  CHECK(r.trace.size() >= 2);
  CHECK(r.total_consumed >= 0.05);  // an in-flight evaluation may overrun
  CHECK(r.pipeline_consumed + r.algorithm_consumed + r.joint_consumed ==
        doctest::Approx(r.total_consumed));
}

TEST_CASE("identical seeds reproduce identical runs") {
  Objective obj = make_synthetic_objective(8, 8, bowl);
  for (Optimizer::Kind kind : {Optimizer::Kind::Random, Optimizer::Kind::Tpe}) {
    RunReport a = run(obj, IterativePolicy{4}, 28, 1e-4, 31, kind);
    RunReport b = run(obj, IterativePolicy{4}, 28, 1e-4, 31, kind);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
      CHECK(a.trace[i].pipeline_config == b.trace[i].pipeline_config);
      CHECK(a.trace[i].algo_config == b.trace[i].algo_config);
      CHECK(a.trace[i].loss == b.trace[i].loss);
    }
  }
}
