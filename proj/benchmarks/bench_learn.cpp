#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "kraft/learn.hpp"

namespace kraft {
namespace {

FeatureTable table_of(const Dataset& d) {
  FeatureTable t;
  for (const auto& name : d.feature_names()) {
    const Column& c = d.column(name);
    t.add(name, c.values, c.missing);
  }
  return t;
}

void run_cv(benchmark::State& state, LearnerKind kind) {
  const Dataset d = bench::numeric_dataset(static_cast<std::size_t>(state.range(0)), 8);
  const FeatureTable t = table_of(d);
  const TargetVector y = TargetVector::from(d);
  LearnerSpec spec{kind};
  spec.n_trees = 20;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_cv(spec, t, y, 5, 7));
}

void BM_CvLinear(benchmark::State& state) { run_cv(state, LearnerKind::Linear); }
void BM_CvTree(benchmark::State& state) { run_cv(state, LearnerKind::DecisionTree); }
void BM_CvForest(benchmark::State& state) { run_cv(state, LearnerKind::RandomForest); }

BENCHMARK(BM_CvLinear)->Arg(200)->Arg(2000);
BENCHMARK(BM_CvTree)->Arg(200)->Arg(2000);
BENCHMARK(BM_CvForest)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace kraft
