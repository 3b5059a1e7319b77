#pragma once

// Deciding the bounded synthesis problem: find an instantiation under which
// no run violates the bounded property, or show that none exists.

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "bms/encode.hpp"
#include "bms/sat.hpp"

namespace bms {

/// A synthesized instantiation failed its own re-check. Indicates a bug.
class SelfCheckFailed : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct SynthBudget {
  std::optional<double> wall_seconds = 600.0;
  std::optional<std::uint64_t> max_iterations;

  std::optional<std::chrono::steady_clock::time_point> deadline_from(std::chrono::steady_clock::time_point start) const;
};

struct SynthStats {
  std::uint64_t iterations = 0;
  std::uint64_t candidate_queries = 0;
  std::uint64_t check_queries = 0;
  double wall_ms = 0;
  double candidate_ms = 0;  // time in the candidate solver
  double check_ms = 0;      // time in the counterexample solver
};

enum class SynthKind { Solution, NoSolution, Budget };

const char* to_string(SynthKind k);

struct SynthOutcome {
  SynthKind kind = SynthKind::Budget;
  std::optional<Instantiation> inst;  // set iff kind == Solution
  SynthStats stats;
};

struct CheckResult {
  std::optional<TraceWitness> counterexample;  // nullopt means valid

  bool valid() const { return !counterexample.has_value(); }
};

/// Bounded check of concrete instantiations of one template against one
/// property. Keeps a single incremental solver; the instantiation is passed
/// as assumptions on the selector bits.
class CandidateChecker {
 public:
  CandidateChecker(const TemplateModel& m, const PropertyMode& prop, std::optional<std::uint32_t> depth = std::nullopt,
                   SolverOptions options = {});

  /// Throws BudgetExceeded when the solver's limits run out.
  CheckResult check(const Instantiation& inst);

  const Unrolling& unrolling() const { return unrolling_; }
  Solver& solver() { return solver_; }

 private:
  Unrolling unrolling_;
  Solver solver_;
};

CheckResult check_candidate(const TemplateModel& m, const Instantiation& inst, const PropertyMode& prop,
                            std::optional<std::uint32_t> depth = std::nullopt, SolverOptions options = {});

enum class Refinement {
  Trace,   // exclude instantiations admitting the exact counterexample run
  States,  // exclude instantiations admitting its state sequence by any rule choice
  Scheduled,  // exclude instantiations whose own run under the trace's rule preferences fails
};

struct CegisOptions {
  SynthBudget budget;
  std::uint64_t seed = 0x5eed;
  Refinement refinement = Refinement::States;
  /// Counterexamples gathered per rejected candidate, each from a different
  /// initial state.
  std::uint32_t counterexamples_per_iteration = 8;
  /// Also require the legitimate states to be closed under every step.
  bool require_closure = false;
};

SynthOutcome cegis(const TemplateModel& m, const PropertyMode& prop, std::optional<std::uint32_t> depth = std::nullopt,
                   CegisOptions options = {});

struct BruteForceOptions {
  SynthBudget budget;
  std::uint64_t seed = 0x5eed;
  unsigned jobs = 1;
};

/// Tries instantiations in lexicographic order; the lowest valid one wins,
/// also when the range is sharded over several workers.
SynthOutcome brute_force(const TemplateModel& m, const PropertyMode& prop, std::optional<std::uint32_t> depth = std::nullopt,
                         BruteForceOptions options = {});

}  // namespace bms
