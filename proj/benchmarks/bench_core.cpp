#include <benchmark/benchmark.h>

#include "flowtune/experiment.hpp"

using namespace flowtune;

namespace {

const OperatorCatalog& catalog() {
  static OperatorCatalog cat = default_catalog();
  return cat;
}

const ConfigSpace& default_space() {
  static ConfigSpace space = pipeline_space(*default_prototype(), catalog());
  return space;
}

void BM_PipelineSpaceCardinality(benchmark::State& state) {
  for (auto _ : state) {
    ConfigSpace space = pipeline_space(*default_prototype(), catalog());
    benchmark::DoNotOptimize(space.cardinality());
  }
}
BENCHMARK(BM_PipelineSpaceCardinality);

void BM_EnumerateDefaultSpace(benchmark::State& state) {
  const ConfigSpace& space = default_space();
  for (auto _ : state) {
    ConfigEnumerator en(space);
    std::size_t count = 0;
    while (auto c = en.next()) ++count;
    benchmark::DoNotOptimize(count);
  }
  state.SetItemsProcessed(state.iterations() * 4750);
}
BENCHMARK(BM_EnumerateDefaultSpace);

void BM_UniformSample(benchmark::State& state) {
  const ConfigSpace& space = default_space();
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(space.sample(rng));
}
BENCHMARK(BM_UniformSample);

void BM_TpeSuggest(benchmark::State& state) {
  const ConfigSpace& space = default_space();
  History history;
  Rng fill(2);
  for (int i = 0; i < state.range(0); ++i) {
    Trial t;
    t.config = space.sample(fill);
    t.loss = uniform_real(fill);
    history.observe(std::move(t));
  }
  Optimizer tpe(Optimizer::Kind::Tpe);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(tpe.suggest(space, history, rng));
}
BENCHMARK(BM_TpeSuggest)->Arg(32)->Arg(128)->Arg(512);

void BM_CrossValIrisTree(benchmark::State& state) {
  Dataset iris = load_dataset("iris");
  LearnerSpec spec = make_learner_spec(LearnerKind::DecisionTree);
  PipelineInstance inst = empty_instance(default_prototype());
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Evaluation ev =
        cross_val_score(inst, catalog(), spec, spec.default_config, iris, 10, seed++);
    benchmark::DoNotOptimize(ev.mean_accuracy);
  }
}
BENCHMARK(BM_CrossValIrisTree);

void BM_FitTransformScalerPca(benchmark::State& state) {
  Dataset iris = load_dataset("iris");
  const OperatorCatalog& cat = catalog();
  PipelineInstance inst = empty_instance(default_prototype());
  inst.assignment["normalize"] = {
      "standard_scaler",
      cat.get("standard_scaler")
          .signature()
          .params.from_assignments({{"with_mean", true}, {"with_std", true}})};
  inst.assignment["features"] = {
      "pca", cat.get("pca").signature().params.from_assignments({{"k_frac", 0.5}})};
  for (auto _ : state) {
    Rng rng(5);
    PipelineFit fit = fit_transform(inst, cat, iris.features, iris.labels, rng);
    benchmark::DoNotOptimize(fit.features);
  }
}
BENCHMARK(BM_FitTransformScalerPca);

void BM_NmadReport(benchmark::State& state) {
  OptimalSet set = load_optimal_set(default_data_dir() + "/fixtures/echr_optima.json");
  for (auto _ : state) benchmark::DoNotOptimize(nmad_report(set));
}
BENCHMARK(BM_NmadReport);

}  // namespace

BENCHMARK_MAIN();
