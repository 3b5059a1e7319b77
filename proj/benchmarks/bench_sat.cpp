#include <benchmark/benchmark.h>

#include "bms/encode.hpp"
#include "bms/ringlab.hpp"
#include "bms/sat.hpp"
#include "support.hpp"

using namespace bms;

namespace {

void random_3cnf_at_threshold(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  testing::Rng rng(1);
  std::vector<CnfFormula> pool;
  for (int i = 0; i < 32; ++i) pool.push_back(testing::random_3cnf(rng, n, static_cast<std::uint32_t>(n * 4.26)));
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solve(pool[k++ % pool.size()]).is_sat());
}
BENCHMARK(random_3cnf_at_threshold)->Arg(50)->Arg(100)->Arg(150)->Unit(benchmark::kMillisecond);

void bmc_initialized(benchmark::State& state) {
  const auto m = known_solution(KnownSolutionName::initialized_solution).model;
  const auto cnf = to_bmc_cnf(unroll(m, PropertyMode::at(static_cast<std::uint32_t>(state.range(0)))));
  for (auto _ : state) benchmark::DoNotOptimize(solve(cnf).is_sat());
  state.counters["clauses"] = static_cast<double>(cnf.clauses.size());
}
BENCHMARK(bmc_initialized)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
