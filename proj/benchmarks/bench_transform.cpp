#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "kraft/transform.hpp"

namespace kraft {
namespace {

std::vector<CandidateFeature> raw_pool(const Dataset& d) {
  std::vector<CandidateFeature> pool;
  for (const auto& name : d.feature_names()) pool.push_back(apply(FeatureExpr::raw(name), d));
  return pool;
}

void BM_ExpandBinary(benchmark::State& state) {
  const Dataset d = bench::numeric_dataset(500, static_cast<std::size_t>(state.range(0)));
  const auto pool = raw_pool(d);
  ExpandOptions options;
  options.cap = 8;
  for (auto _ : state) benchmark::DoNotOptimize(expand_action(op_info(OpId::Div), pool, d, d.target_values(), options));
}
BENCHMARK(BM_ExpandBinary)->Arg(5)->Arg(10)->Arg(20);

void BM_ExpandUnary(benchmark::State& state) {
  const Dataset d = bench::numeric_dataset(500, static_cast<std::size_t>(state.range(0)));
  const auto pool = raw_pool(d);
  ExpandOptions options;
  options.cap = 8;
  for (auto _ : state) benchmark::DoNotOptimize(expand_action(op_info(OpId::Log), pool, d, d.target_values(), options));
}
BENCHMARK(BM_ExpandUnary)->Arg(5)->Arg(20);

void BM_ApplyNested(benchmark::State& state) {
  const Dataset d = bench::numeric_dataset(static_cast<std::size_t>(state.range(0)), 3);
  const FeatureExpr e = FeatureExpr::binary(OpId::Div, FeatureExpr::raw("c0"),
                                            FeatureExpr::unary(OpId::Square, FeatureExpr::raw("c1")));
  for (auto _ : state) benchmark::DoNotOptimize(apply(e, d));
}
BENCHMARK(BM_ApplyNested)->Arg(200)->Arg(5000);

}  // namespace
}  // namespace kraft
