#include <benchmark/benchmark.h>

#include "bms/ringlab.hpp"
#include "bms/verify.hpp"
#include "support.hpp"

using namespace bms;

namespace {

void verify_reference(benchmark::State& state) {
  const auto m = known_solution(KnownSolutionName::section2_solution).model;
  for (auto _ : state) benchmark::DoNotOptimize(verify_all(m).all_pass());
}
BENCHMARK(verify_reference)->Unit(benchmark::kMicrosecond);

void afg_random_graphs(benchmark::State& state) {
  testing::Rng rng(8);
  std::vector<testing::RandomGraph> graphs;
  for (int i = 0; i < 64; ++i) graphs.push_back(testing::random_graph(rng, static_cast<std::uint32_t>(state.range(0))));
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& g = graphs[k++ % graphs.size()];
    benchmark::DoNotOptimize(check_afg(g.graph, g.phi).has_value());
  }
}
BENCHMARK(afg_random_graphs)->Arg(10)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
