#pragma once

// Conflict-driven clause-learning SAT solver: two-watched-literal propagation,
// first-UIP learning with clause minimization, VSIDS, phase saving, Luby
// restarts and activity-based learnt clause reduction. Incremental: clauses
// and variables may be added between solve() calls, and each call may carry
// assumption literals.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bms/cnf.hpp"

namespace bms {

/// A conflict budget or deadline ran out before the solver reached a verdict.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  std::uint64_t seed = 0x5eed;
  std::optional<std::uint64_t> conflict_budget;  // per solve() call
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

enum class SatStatus { Sat, Unsat };

struct SatResult {
  SatStatus status = SatStatus::Unsat;
  std::vector<bool> model;  // model[v] for v in 1..num_vars; index 0 unused

  bool is_sat() const { return status == SatStatus::Sat; }
};

struct SolverStats {
  std::uint64_t solves = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t decisions = 0;
  std::uint64_t propagations = 0;
  std::uint64_t restarts = 0;
};

class Solver {
 public:
  explicit Solver(SolverOptions options = {});

  std::uint32_t num_vars() const { return static_cast<std::uint32_t>(assigns_.size()); }
  std::uint32_t new_var();
  /// Makes variables 1..n exist.
  void reserve_vars(std::uint32_t n);

  /// Returns false once the clause set is unsatisfiable at the root level.
  bool add_clause(std::span<const Lit> clause);
  bool add_clause(std::initializer_list<Lit> clause) { return add_clause(std::span<const Lit>(clause.begin(), clause.size())); }
  void add_formula(const CnfFormula& f);

  SatResult solve(std::span<const Lit> assumptions = {});

  void set_deadline(std::optional<std::chrono::steady_clock::time_point> deadline) { options_.deadline = deadline; }
  void set_conflict_budget(std::optional<std::uint64_t> budget) { options_.conflict_budget = budget; }
  const SolverStats& stats() const { return stats_; }

 private:
  using ILit = std::uint32_t;  // 2 * var + sign, var 0-based
  using CRef = std::uint32_t;
  static constexpr CRef kNoReason = UINT32_MAX;

  struct ClauseRec {
    std::vector<ILit> lits;
    double activity = 0;
    bool learnt = false;
    bool removed = false;
  };
  struct Watcher {
    CRef cref;
    ILit blocker;
  };

  static ILit to_internal(Lit l) { return static_cast<ILit>(2 * (std::abs(l) - 1) + (l < 0 ? 1 : 0)); }
  static std::uint32_t var_of(ILit l) { return l >> 1; }
  static bool sign_of(ILit l) { return (l & 1U) != 0; }

  // +1 true, -1 false, 0 unassigned
  std::int8_t value(ILit l) const {
    const std::int8_t v = assigns_[var_of(l)];
    return sign_of(l) ? static_cast<std::int8_t>(-v) : v;
  }
  std::uint32_t decision_level() const { return static_cast<std::uint32_t>(trail_lim_.size()); }

  void enqueue(ILit l, CRef reason);
  CRef propagate();
  void analyze(CRef conflict, std::vector<ILit>& learnt, std::uint32_t& backtrack_level);
  bool redundant(ILit l) const;
  void cancel_until(std::uint32_t level);
  void attach(CRef cref);
  CRef add_internal(std::vector<ILit> lits, bool learnt);
  void reduce_learnts();
  bool locked(CRef cref) const;
  std::optional<ILit> pick_branch();
  void bump_var(std::uint32_t v);
  void bump_clause(ClauseRec& c);
  void check_limits(std::uint64_t conflicts_this_call);

  // variable order heap (max activity on top)
  void heap_insert(std::uint32_t v);
  void heap_up(std::size_t i);
  void heap_down(std::size_t i);
  std::uint32_t heap_pop();
  bool heap_less(std::uint32_t a, std::uint32_t b) const { return activity_[a] > activity_[b]; }

  SolverOptions options_;
  SolverStats stats_;
  bool ok_ = true;

  std::vector<ClauseRec> clauses_;
  std::vector<CRef> learnts_;
  std::vector<std::vector<Watcher>> watches_;  // by literal that must not become false
  std::vector<std::int8_t> assigns_;
  std::vector<std::uint32_t> level_;
  std::vector<CRef> reason_;
  std::vector<char> polarity_;  // saved phase: 1 = last value was false
  std::vector<double> activity_;
  std::vector<char> seen_;
  std::vector<ILit> trail_;
  std::vector<std::uint32_t> trail_lim_;
  std::size_t qhead_ = 0;

  std::vector<std::uint32_t> heap_;
  std::vector<std::int64_t> heap_pos_;

  double var_inc_ = 1.0;
  double clause_inc_ = 1.0;
  double max_learnts_ = 0;
  std::uint64_t rng_state_;
};

/// One-shot convenience wrapper.
SatResult solve(const CnfFormula& f, std::span<const Lit> assumptions = {}, SolverOptions options = {});

}  // namespace bms
