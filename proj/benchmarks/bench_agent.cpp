#include <benchmark/benchmark.h>

#include "kraft/agent.hpp"
#include "kraft/rng.hpp"

namespace kraft {
namespace {

std::vector<double> random_input(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform();
  return x;
}

void BM_QForward(benchmark::State& state) {
  const auto inputs = static_cast<std::size_t>(state.range(0));
  const QNetwork net({inputs, 64, 64, 19}, 1);
  Rng rng(2);
  const auto x = random_input(rng, inputs);
  for (auto _ : state) benchmark::DoNotOptimize(q_forward(net, x));
}
BENCHMARK(BM_QForward)->Arg(32)->Arg(128);

void BM_TdTrainStep(benchmark::State& state) {
  const std::size_t inputs = 64;
  QNetwork net({inputs, 64, 64, 19}, 1);
  const QNetwork target({inputs, 64, 64, 19}, 2);
  Rng rng(3);
  std::vector<Transition> batch;
  for (int i = 0; i < state.range(0); ++i)
    batch.push_back({random_input(rng, inputs), rng.index(19), rng.uniform(-1, 1), random_input(rng, inputs), false});
  const AgentConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(td_train_step(net, target, batch, cfg));
}
BENCHMARK(BM_TdTrainStep)->Arg(32)->Arg(128);

}  // namespace
}  // namespace kraft
