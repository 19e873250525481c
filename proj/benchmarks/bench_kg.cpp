#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "kraft/kg.hpp"

namespace kraft {
namespace {

const KnowledgeGraph& graph() {
  static const KnowledgeGraph kg = load_kg(KRAFT_DATA_DIR "/default_kg.json")
                                       .with_mapping({{"c0", {"Weight", "kg"}},
                                                      {"c1", {"Height", "m"}},
                                                      {"c2", {"Temperature", "°C"}},
                                                      {"c3", {"Price", "USD"}}});
  return kg;
}

void BM_JudgeBmi(benchmark::State& state) {
  const Dataset d = bench::numeric_dataset(50, 4);
  const FeatureExpr e = FeatureExpr::binary(OpId::Div, FeatureExpr::raw("c0"),
                                            FeatureExpr::unary(OpId::Square, FeatureExpr::raw("c1")));
  for (auto _ : state) benchmark::DoNotOptimize(judge(graph(), e, d));
}
BENCHMARK(BM_JudgeBmi);

void BM_JudgeDeep(benchmark::State& state) {
  const Dataset d = bench::numeric_dataset(50, 4);
  FeatureExpr e = FeatureExpr::raw("c0");
  for (int i = 0; i < state.range(0); ++i)
    e = FeatureExpr::binary(i % 2 ? OpId::Mul : OpId::Div, e, FeatureExpr::raw(i % 3 ? "c1" : "c3"));
  for (auto _ : state) benchmark::DoNotOptimize(judge(graph(), e, d));
}
BENCHMARK(BM_JudgeDeep)->Arg(2)->Arg(5);

void BM_Subsumes(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(graph().subsumes("Height", "PhysicalQuantity"));
}
BENCHMARK(BM_Subsumes);

}  // namespace
}  // namespace kraft
