#include <benchmark/benchmark.h>

#include "finlab/heavy_tail.hpp"
#include "finlab/speed_measure.hpp"
#include "finlab/stable_law.hpp"

using namespace finlab;

namespace {

void BM_ParetoSites(benchmark::State& state) {
  const TailSpec spec = TailSpec::pareto(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(sample_tau(spec, state.range(0), RandomStream(1)));
  state.SetItemsProcessed(state.iterations() * (2 * state.range(0) + 1));
}
BENCHMARK(BM_ParetoSites)->Arg(1000)->Arg(100000);

void BM_KanterDraw(benchmark::State& state) {
  const StableLaw law(0.5);
  RandomStream rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(law.sample(rng));
}
BENCHMARK(BM_KanterDraw);

void BM_StableSurvivalQuadrature(benchmark::State& state) {
  const StableLaw law(0.5);
  double y = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(law.survival(y));
    y = y < 1e6 ? y * 1.7 : 0.1;
  }
}
BENCHMARK(BM_StableSurvivalQuadrature);

void BM_CoupledTau(benchmark::State& state) {
  const TailSpec spec = TailSpec::pareto(0.5);
  const auto inc = sample_stable_increments(0.5, 1e-3, state.range(0), RandomStream(4));
  benchmark::DoNotOptimize(g_inverse(spec, 1.0));  // builds the tail table outside the timing
  for (auto _ : state) benchmark::DoNotOptimize(coupled_tau(inc, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(inc.size()));
}
BENCHMARK(BM_CoupledTau)->Arg(10000);

void BM_FinMeasure(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_fin_measure({0.5, 5.0, 1e-3}, RandomStream(++seed)));
}
BENCHMARK(BM_FinMeasure);

}  // namespace
