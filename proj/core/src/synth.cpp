#include "bms/synth.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <mutex>
#include <thread>

#include "bms/tseitin.hpp"

namespace bms {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<Lit> param_assumptions(const Unrolling& u, const Instantiation& inst) {
  std::vector<Lit> out;
  for (std::size_t p = 0; p < u.map.param_bits.size(); ++p) {
    const auto& bits = u.map.param_bits[p];
    for (std::size_t b = 0; b < bits.size(); ++b) {
      const auto var = static_cast<Lit>(StepVarMap::input_of(u.circuit, bits[b]) + 1);
      out.push_back(((inst.choice[p] >> b) & 1U) ? var : -var);
    }
  }
  return out;
}

void require_complete(const TemplateModel& m, const Instantiation& inst) {
  if (inst.choice.size() != m.params.size()) throw PartialInstantiation("instantiation does not bind every parameter");
  for (std::size_t p = 0; p < m.params.size(); ++p) {
    if (inst.choice[p] >= m.params[p].domain.size()) throw PartialInstantiation("choice out of range for " + m.params[p].name);
  }
}

}  // namespace

std::optional<Clock::time_point> SynthBudget::deadline_from(Clock::time_point start) const {
  if (!wall_seconds) return std::nullopt;
  return start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(*wall_seconds));
}

const char* to_string(SynthKind k) {
  switch (k) {
    case SynthKind::Solution:
      return "solution";
    case SynthKind::NoSolution:
      return "no_solution";
    case SynthKind::Budget:
      return "budget";
  }
  return "?";
}

CandidateChecker::CandidateChecker(const TemplateModel& m, const PropertyMode& prop, std::optional<std::uint32_t> depth,
                                   SolverOptions options)
    : unrolling_(unroll(m, prop, depth)), solver_(options) {
  solver_.add_formula(to_bmc_cnf(unrolling_));
}

CheckResult CandidateChecker::check(const Instantiation& inst) {
  require_complete(unrolling_.prepared.model, inst);
  const auto assumptions = param_assumptions(unrolling_, inst);
  const auto result = solver_.solve(assumptions);
  if (!result.is_sat()) return {};
  return {decode_trace(unrolling_, inputs_from_model(unrolling_, result.model))};
}

CheckResult check_candidate(const TemplateModel& m, const Instantiation& inst, const PropertyMode& prop,
                            std::optional<std::uint32_t> depth, SolverOptions options) {
  CandidateChecker checker(m, prop, depth, options);
  return checker.check(inst);
}

namespace {

// Re-checks a solution on a fresh solver before it leaves the module.
void self_check(const TemplateModel& m, const Instantiation& inst, const PropertyMode& prop,
                std::optional<std::uint32_t> depth, std::uint64_t seed) {
  SolverOptions opts;
  opts.seed = seed ^ 0x9e3779b97f4a7c15ULL;
  if (!check_candidate(m, inst, prop, depth, opts).valid()) {
    throw SelfCheckFailed("synthesized instantiation admits a violating run");
  }
}

}  // namespace

SynthOutcome cegis(const TemplateModel& m, const PropertyMode& prop, std::optional<std::uint32_t> depth,
                   CegisOptions options) {
  const auto start = Clock::now();
  SynthOutcome out;
  const auto deadline = options.budget.deadline_from(start);
  auto finish = [&](SynthKind kind) {
    out.kind = kind;
    out.stats.wall_ms = elapsed_ms(start);
    return out;
  };

  SolverOptions check_opts;
  check_opts.seed = options.seed;
  check_opts.deadline = deadline;
  try {
    CandidateChecker checker(m, prop, depth, check_opts);
    const Unrolling& u = checker.unrolling();

    // Candidate side: one CNF variable per selector bit, then refinement
    // gates in one shared circuit.
    const auto nbits = static_cast<std::uint32_t>(u.map.param_bit_count());
    RefinementCircuit shared(u);
    CnfFormula cand;
    cand.num_vars = nbits;
    std::vector<int> bit_vars(nbits);
    for (std::uint32_t i = 0; i < nbits; ++i) bit_vars[i] = static_cast<int>(i + 1);
    TseitinEncoder encoder(shared.circuit(), cand, bit_vars);
    SolverOptions cand_opts;
    cand_opts.seed = options.seed + 1;
    cand_opts.deadline = deadline;
    Solver candidates(cand_opts);
    std::size_t fed = 0;
    auto add_constraint = [&](Circuit::Edge root) {
      encoder.assert_root(root);
      candidates.reserve_vars(cand.num_vars);
      for (; fed < cand.clauses.size(); ++fed) candidates.add_clause(cand.clauses[fed]);
    };
    add_constraint(shared.in_range());
    if (options.require_closure) add_constraint(shared.closed(Predicate::legitimate()));

    while (true) {
      if (options.budget.max_iterations && out.stats.iterations >= *options.budget.max_iterations) {
        return finish(SynthKind::Budget);
      }
      ++out.stats.iterations;
      ++out.stats.candidate_queries;
      auto t0 = Clock::now();
      const auto cand_result = candidates.solve();
      out.stats.candidate_ms += elapsed_ms(t0);
      if (!cand_result.is_sat()) return finish(SynthKind::NoSolution);
      std::vector<bool> inputs(u.circuit.input_count());
      for (std::uint32_t i = 0; i < nbits; ++i) inputs[i] = cand_result.model[i + 1];
      const auto inst = decode_instantiation(u, inputs);

      ++out.stats.check_queries;
      t0 = Clock::now();
      const auto verdict = checker.check(inst);
      out.stats.check_ms += elapsed_ms(t0);
      if (verdict.valid()) {
        self_check(m, inst, prop, depth, options.seed);
        out.inst = inst;
        return finish(SynthKind::Solution);
      }
      auto refine = [&](const TraceWitness& cex) {
        Circuit::Edge root = Circuit::kFalse;
        switch (options.refinement) {
          case Refinement::Scheduled:
            root = shared.scheduled_run(cex);
            break;
          case Refinement::States:
            root = shared.state_sequence(cex.states);
            break;
          case Refinement::Trace:
            root = shared.import(cofactor_params(u, cex));
            break;
        }
        add_constraint(Circuit::negate(root));
      };
      refine(*verdict.counterexample);
      // More counterexamples for the same candidate, from other initial states.
      if (options.counterexamples_per_iteration > 1) {
        auto& solver = checker.solver();
        const Lit act = static_cast<Lit>(solver.new_var());
        auto assumptions = param_assumptions(u, inst);
        assumptions.push_back(act);
        auto block = [&](State s0) {
          Clause clause{-act};
          for (const auto e : u.map.state[0]) {
            if (Circuit::is_const(e)) continue;
            const auto input = StepVarMap::input_of(u.circuit, e);
            const auto var = static_cast<Lit>(input + 1);
            clause.push_back(s0.get(VarId{u.map.inputs[input].index}) ? -var : var);
          }
          solver.add_clause(clause);
        };
        block(verdict.counterexample->states[0]);
        for (std::uint32_t k = 1; k < options.counterexamples_per_iteration; ++k) {
          ++out.stats.check_queries;
          t0 = Clock::now();
          const auto more = solver.solve(assumptions);
          out.stats.check_ms += elapsed_ms(t0);
          if (!more.is_sat()) break;
          const auto cex = decode_trace(u, inputs_from_model(u, more.model));
          refine(cex);
          block(cex.states[0]);
        }
        solver.add_clause({-act});
      }
    }
  } catch (const BudgetExceeded&) {
    return finish(SynthKind::Budget);
  }
}

SynthOutcome brute_force(const TemplateModel& m, const PropertyMode& prop, std::optional<std::uint32_t> depth,
                         BruteForceOptions options) {
  const auto start = Clock::now();
  SynthOutcome out;
  const auto deadline = options.budget.deadline_from(start);
  const auto total = instantiation_count(m);
  if (!total) {
    out.kind = SynthKind::Budget;
    return out;
  }
  std::uint64_t limit = *total;
  if (options.budget.max_iterations) limit = std::min(limit, *options.budget.max_iterations);
  const unsigned jobs = std::max(1U, options.jobs);

  std::atomic<std::uint64_t> best{std::numeric_limits<std::uint64_t>::max()};
  std::atomic<bool> out_of_budget{false};
  std::atomic<std::uint64_t> checks{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&](unsigned id) {
    try {
      SolverOptions opts;
      opts.seed = options.seed + id;
      opts.deadline = deadline;
      CandidateChecker checker(m, prop, depth, opts);
      for (std::uint64_t rank = id; rank < limit; rank += jobs) {
        if (rank >= best.load() || out_of_budget.load()) return;
        checks.fetch_add(1);
        if (checker.check(instantiation_at(m, rank)).valid()) {
          auto cur = best.load();
          while (rank < cur && !best.compare_exchange_weak(cur, rank)) {
          }
          return;
        }
      }
    } catch (const BudgetExceeded&) {
      out_of_budget.store(true);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      out_of_budget.store(true);
    }
  };

  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned id = 0; id < jobs; ++id) threads.emplace_back(worker, id);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);

  out.stats.iterations = checks.load();
  out.stats.check_queries = checks.load();
  const auto found = best.load();
  // Workers stop early only past `best` or on budget, so without a budget
  // stop every rank below `best` was checked.
  if (found != std::numeric_limits<std::uint64_t>::max() && !out_of_budget.load()) {
    out.inst = instantiation_at(m, found);
    self_check(m, *out.inst, prop, depth, options.seed);
    out.kind = SynthKind::Solution;
  } else if (out_of_budget.load() || limit < *total) {
    out.kind = SynthKind::Budget;
  } else {
    out.kind = SynthKind::NoSolution;
  }
  out.stats.wall_ms = elapsed_ms(start);
  return out;
}

}  // namespace bms
