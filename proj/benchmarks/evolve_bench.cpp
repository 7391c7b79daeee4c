#include <benchmark/benchmark.h>

#include <vector>

#include "finlab/gap_chain.hpp"
#include "finlab/heavy_tail.hpp"
#include "finlab/spectral.hpp"

using namespace finlab;

namespace {

GapChain pareto_chain(std::int64_t half_width) {
  return GapChain(lattice_measure(sample_tau(TailSpec::pareto(0.5), half_width, RandomStream(1)), 1.0, 1.0));
}

void BM_Uniformization(benchmark::State& state) {
  const GapChain chain = pareto_chain(state.range(0));
  const std::size_t start = chain.nearest_atom(0.0);
  const EvolveOptions opt{EvolveMethod::Uniformization};
  for (auto _ : state) benchmark::DoNotOptimize(evolve(chain, start, 100.0, opt));
}
BENCHMARK(BM_Uniformization)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_SpectralBuild(benchmark::State& state) {
  const GapChain chain = pareto_chain(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(SpectralPropagator(chain));
}
BENCHMARK(BM_SpectralBuild)->Arg(100)->Arg(300)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_SpectralRows(benchmark::State& state) {
  const GapChain chain = pareto_chain(400);
  const SpectralPropagator prop(chain);
  std::vector<std::size_t> starts(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = 400 - starts.size() / 2 + i;
  for (auto _ : state) benchmark::DoNotOptimize(prop.rows(starts, 1e4));
}
BENCHMARK(BM_SpectralRows)->Arg(1)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Gillespie(benchmark::State& state) {
  const GapChain chain = pareto_chain(20);
  const std::size_t start = chain.nearest_atom(0.0);
  RandomStream rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_endpoint(chain, start, 1.0, rng));
}
BENCHMARK(BM_Gillespie);

}  // namespace
