#include <benchmark/benchmark.h>

#include "bms/ringlab.hpp"
#include "bms/synth.hpp"

using namespace bms;

namespace {

void cegis_template(benchmark::State& state, TemplateName t, PropertyMode prop, bool closed) {
  const auto m = build_template(t);
  CegisOptions opts;
  opts.require_closure = closed;
  for (auto _ : state) {
    const auto out = cegis(m, prop, std::nullopt, opts);
    state.counters["iterations"] = static_cast<double>(out.stats.iterations);
  }
}
BENCHMARK_CAPTURE(cegis_template, single_rule_x4, TemplateName::single_rule, PropertyMode::at(4), false)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(cegis_template, single_rule_x16, TemplateName::single_rule, PropertyMode::at(16), false)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(cegis_template, single_rule_BR_x4, TemplateName::single_rule_BR, PropertyMode::at(4), false)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(cegis_template, initialized_x4, TemplateName::single_rule_B_blocks_initialized, PropertyMode::at(4), false)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(cegis_template, simpl_values_fair_x12_closed, TemplateName::two_rules_reduced_BR_simpl_values,
                  PropertyMode::at(12, Predicate::legitimate_and_moved()), true)
    ->Unit(benchmark::kMillisecond)
    ->Iterations(1);

void brute_single_rule(benchmark::State& state) {
  const auto m = build_template(TemplateName::single_rule);
  BruteForceOptions opts;
  opts.jobs = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(brute_force(m, PropertyMode::at(4), std::nullopt, opts).kind);
}
BENCHMARK(brute_single_rule)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
