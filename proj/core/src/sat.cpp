#include "bms/sat.hpp"

#include <algorithm>
#include <cmath>

namespace bms {

namespace {

double luby(double y, std::uint64_t x) {
  std::uint64_t size = 1;
  int seq = 0;
  while (size < x + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    --seq;
    x = x % size;
  }
  return std::pow(y, seq);
}

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr double kVarDecay = 0.95;
constexpr double kClauseDecay = 0.999;
constexpr std::uint64_t kRestartBase = 100;

}  // namespace

Solver::Solver(SolverOptions options) : options_(options), rng_state_(options.seed) {}

std::uint32_t Solver::new_var() {
  const auto v = static_cast<std::uint32_t>(assigns_.size());
  assigns_.push_back(0);
  level_.push_back(0);
  reason_.push_back(kNoReason);
  polarity_.push_back(1);
  // Tiny seeded perturbation breaks activity ties deterministically.
  activity_.push_back(static_cast<double>(splitmix(rng_state_) % 1000) * 1e-9);
  seen_.push_back(0);
  watches_.emplace_back();
  watches_.emplace_back();
  heap_pos_.push_back(-1);
  heap_insert(v);
  return v + 1;
}

void Solver::reserve_vars(std::uint32_t n) {
  while (num_vars() < n) new_var();
}

bool Solver::add_clause(std::span<const Lit> clause) {
  if (!ok_) return false;
  cancel_until(0);
  std::vector<ILit> lits;
  lits.reserve(clause.size());
  for (const Lit l : clause) {
    if (l == 0) throw std::invalid_argument("literal 0 in clause");
    reserve_vars(static_cast<std::uint32_t>(std::abs(l)));
    lits.push_back(to_internal(l));
  }
  std::sort(lits.begin(), lits.end());
  std::vector<ILit> kept;
  for (std::size_t i = 0; i < lits.size(); ++i) {
    if (i > 0 && lits[i] == lits[i - 1]) continue;
    if (i > 0 && lits[i] == (lits[i - 1] ^ 1U)) return true;  // tautology
    const auto v = value(lits[i]);
    if (v > 0) return true;
    if (v < 0) continue;
    kept.push_back(lits[i]);
  }
  if (kept.empty()) {
    ok_ = false;
    return false;
  }
  if (kept.size() == 1) {
    enqueue(kept[0], kNoReason);
    if (propagate() != kNoReason) ok_ = false;
    return ok_;
  }
  add_internal(std::move(kept), false);
  return true;
}

void Solver::add_formula(const CnfFormula& f) {
  reserve_vars(f.num_vars);
  for (const auto& c : f.clauses) add_clause(c);
}

Solver::CRef Solver::add_internal(std::vector<ILit> lits, bool learnt) {
  const auto cref = static_cast<CRef>(clauses_.size());
  clauses_.push_back(ClauseRec{std::move(lits), 0.0, learnt, false});
  attach(cref);
  if (learnt) learnts_.push_back(cref);
  return cref;
}

void Solver::attach(CRef cref) {
  const auto& c = clauses_[cref];
  watches_[c.lits[0]].push_back(Watcher{cref, c.lits[1]});
  watches_[c.lits[1]].push_back(Watcher{cref, c.lits[0]});
}

void Solver::enqueue(ILit l, CRef reason) {
  const auto v = var_of(l);
  assigns_[v] = sign_of(l) ? -1 : 1;
  level_[v] = decision_level();
  reason_[v] = reason;
  trail_.push_back(l);
}

Solver::CRef Solver::propagate() {
  CRef conflict = kNoReason;
  while (qhead_ < trail_.size()) {
    const ILit p = trail_[qhead_++];
    const ILit false_lit = p ^ 1U;
    auto& ws = watches_[false_lit];
    ++stats_.propagations;
    std::size_t i = 0, j = 0;
    while (i < ws.size()) {
      const Watcher w = ws[i++];
      if (value(w.blocker) > 0) {
        ws[j++] = w;
        continue;
      }
      auto& c = clauses_[w.cref];
      if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
      const ILit first = c.lits[0];
      if (first != w.blocker && value(first) > 0) {
        ws[j++] = Watcher{w.cref, first};
        continue;
      }
      bool moved = false;
      for (std::size_t k = 2; k < c.lits.size(); ++k) {
        if (value(c.lits[k]) >= 0) {
          std::swap(c.lits[1], c.lits[k]);
          watches_[c.lits[1]].push_back(Watcher{w.cref, first});
          moved = true;
          break;
        }
      }
      if (moved) continue;
      ws[j++] = Watcher{w.cref, first};
      if (value(first) < 0) {
        conflict = w.cref;
        qhead_ = trail_.size();
        while (i < ws.size()) ws[j++] = ws[i++];
      } else {
        enqueue(first, w.cref);
      }
    }
    ws.resize(j);
    if (conflict != kNoReason) break;
  }
  return conflict;
}

void Solver::bump_var(std::uint32_t v) {
  if ((activity_[v] += var_inc_) > 1e100) {
    for (auto& a : activity_) a *= 1e-100;
    var_inc_ *= 1e-100;
  }
  if (heap_pos_[v] >= 0) heap_up(static_cast<std::size_t>(heap_pos_[v]));
}

void Solver::bump_clause(ClauseRec& c) {
  if ((c.activity += clause_inc_) > 1e20) {
    for (const auto cref : learnts_) clauses_[cref].activity *= 1e-20;
    clause_inc_ *= 1e-20;
  }
}

void Solver::analyze(CRef conflict, std::vector<ILit>& learnt, std::uint32_t& backtrack_level) {
  learnt.clear();
  learnt.push_back(0);  // placeholder for the asserting literal
  int path_count = 0;
  std::optional<ILit> p;
  std::size_t index = trail_.size();
  CRef confl = conflict;
  do {
    auto& c = clauses_[confl];
    if (c.learnt) bump_clause(c);
    for (std::size_t k = p ? 1 : 0; k < c.lits.size(); ++k) {
      const ILit q = c.lits[k];
      const auto v = var_of(q);
      if (seen_[v] || level_[v] == 0) continue;
      bump_var(v);
      seen_[v] = 1;
      if (level_[v] >= decision_level()) {
        ++path_count;
      } else {
        learnt.push_back(q);
      }
    }
    while (!seen_[var_of(trail_[--index])]) {
    }
    p = trail_[index];
    confl = reason_[var_of(*p)];
    seen_[var_of(*p)] = 0;
    --path_count;
  } while (path_count > 0);
  learnt[0] = *p ^ 1U;

  // Drop literals implied by the rest of the clause through their reasons.
  std::vector<ILit> kept{learnt[0]};
  for (std::size_t k = 1; k < learnt.size(); ++k) {
    if (!redundant(learnt[k])) kept.push_back(learnt[k]);
  }
  for (std::size_t k = 1; k < learnt.size(); ++k) seen_[var_of(learnt[k])] = 0;
  learnt.swap(kept);

  backtrack_level = 0;
  if (learnt.size() > 1) {
    std::size_t max_i = 1;
    for (std::size_t k = 2; k < learnt.size(); ++k) {
      if (level_[var_of(learnt[k])] > level_[var_of(learnt[max_i])]) max_i = k;
    }
    std::swap(learnt[1], learnt[max_i]);
    backtrack_level = level_[var_of(learnt[1])];
  }
}

bool Solver::redundant(ILit l) const {
  const CRef r = reason_[var_of(l)];
  if (r == kNoReason) return false;
  const auto& c = clauses_[r];
  for (std::size_t k = 1; k < c.lits.size(); ++k) {
    const auto v = var_of(c.lits[k]);
    if (!seen_[v] && level_[v] > 0) return false;
  }
  return true;
}

void Solver::cancel_until(std::uint32_t level) {
  if (decision_level() <= level) return;
  for (std::size_t i = trail_.size(); i-- > trail_lim_[level];) {
    const auto v = var_of(trail_[i]);
    assigns_[v] = 0;
    reason_[v] = kNoReason;
    polarity_[v] = sign_of(trail_[i]) ? 1 : 0;
    if (heap_pos_[v] < 0) heap_insert(v);
  }
  trail_.resize(trail_lim_[level]);
  trail_lim_.resize(level);
  qhead_ = trail_.size();
}

bool Solver::locked(CRef cref) const {
  const auto& c = clauses_[cref];
  const auto v = var_of(c.lits[0]);
  return reason_[v] == cref && value(c.lits[0]) > 0;
}

void Solver::reduce_learnts() {
  std::sort(learnts_.begin(), learnts_.end(), [&](CRef a, CRef b) {
    const auto& ca = clauses_[a];
    const auto& cb = clauses_[b];
    if ((ca.lits.size() > 2) != (cb.lits.size() > 2)) return ca.lits.size() > 2;
    return ca.activity < cb.activity;
  });
  const double extra = clause_inc_ / static_cast<double>(std::max<std::size_t>(learnts_.size(), 1));
  std::vector<CRef> kept;
  for (std::size_t i = 0; i < learnts_.size(); ++i) {
    const CRef cref = learnts_[i];
    auto& c = clauses_[cref];
    const bool removable = c.lits.size() > 2 && !locked(cref) && (i < learnts_.size() / 2 || c.activity < extra);
    if (removable) {
      c.removed = true;
    } else {
      kept.push_back(cref);
    }
  }
  learnts_.swap(kept);
  for (auto& ws : watches_) {
    std::erase_if(ws, [&](const Watcher& w) { return clauses_[w.cref].removed; });
  }
  for (auto& c : clauses_) {
    if (c.removed && !c.lits.empty()) std::vector<ILit>().swap(c.lits);
  }
}

std::optional<Solver::ILit> Solver::pick_branch() {
  while (!heap_.empty()) {
    const auto v = heap_pop();
    if (assigns_[v] == 0) return 2 * v + (polarity_[v] ? 1U : 0U);
  }
  return std::nullopt;
}

void Solver::check_limits(std::uint64_t conflicts_this_call) {
  if (options_.conflict_budget && conflicts_this_call > *options_.conflict_budget) {
    cancel_until(0);
    throw BudgetExceeded("SAT conflict budget exhausted");
  }
  if (options_.deadline && std::chrono::steady_clock::now() > *options_.deadline) {
    cancel_until(0);
    throw BudgetExceeded("SAT deadline reached");
  }
}

SatResult Solver::solve(std::span<const Lit> assumptions) {
  ++stats_.solves;
  SatResult result;
  if (!ok_) return result;
  std::vector<ILit> assume;
  for (const Lit l : assumptions) {
    if (l == 0) throw std::invalid_argument("literal 0 in assumptions");
    reserve_vars(static_cast<std::uint32_t>(std::abs(l)));
    assume.push_back(to_internal(l));
  }
  cancel_until(0);
  if (propagate() != kNoReason) {
    ok_ = false;
    return result;
  }
  if (max_learnts_ == 0) max_learnts_ = std::max(clauses_.size() / 3.0, 2000.0);

  std::uint64_t conflicts_this_call = 0;
  std::uint64_t restart_round = 0;
  std::vector<ILit> learnt;
  for (;;) {
    const auto restart_limit = static_cast<std::uint64_t>(luby(2.0, restart_round) * kRestartBase);
    std::uint64_t conflicts_this_restart = 0;
    bool restart = false;
    while (!restart) {
      const CRef conflict = propagate();
      if (conflict != kNoReason) {
        ++stats_.conflicts;
        ++conflicts_this_call;
        ++conflicts_this_restart;
        if (decision_level() == 0) {
          ok_ = false;
          return result;
        }
        std::uint32_t back = 0;
        analyze(conflict, learnt, back);
        cancel_until(back);
        if (learnt.size() == 1) {
          enqueue(learnt[0], kNoReason);
        } else {
          const CRef cref = add_internal(learnt, true);
          bump_clause(clauses_[cref]);
          enqueue(learnt[0], cref);
        }
        var_inc_ /= kVarDecay;
        clause_inc_ /= kClauseDecay;
        if ((conflicts_this_call & 63U) == 0) check_limits(conflicts_this_call);
        continue;
      }
      if (conflicts_this_restart >= restart_limit) {
        restart = true;
        break;
      }
      if (static_cast<double>(learnts_.size()) - static_cast<double>(trail_.size()) >= max_learnts_) {
        reduce_learnts();
        max_learnts_ *= 1.1;
      }
      std::optional<ILit> next;
      while (decision_level() < assume.size()) {
        const ILit a = assume[decision_level()];
        const auto v = value(a);
        if (v > 0) {
          trail_lim_.push_back(static_cast<std::uint32_t>(trail_.size()));
        } else if (v < 0) {
          cancel_until(0);
          return result;  // assumptions contradict the formula
        } else {
          next = a;
          break;
        }
      }
      if (!next) {
        ++stats_.decisions;
        if ((stats_.decisions & 4095U) == 0) check_limits(conflicts_this_call);
        next = pick_branch();
        if (!next) {
          result.status = SatStatus::Sat;
          result.model.assign(num_vars() + 1, false);
          for (std::uint32_t v = 0; v < num_vars(); ++v) result.model[v + 1] = assigns_[v] > 0;
          cancel_until(0);
          return result;
        }
      }
      trail_lim_.push_back(static_cast<std::uint32_t>(trail_.size()));
      enqueue(*next, kNoReason);
    }
    ++stats_.restarts;
    ++restart_round;
    cancel_until(0);
  }
}

// ---------------------------------------------------------------------------

void Solver::heap_insert(std::uint32_t v) {
  heap_pos_[v] = static_cast<std::int64_t>(heap_.size());
  heap_.push_back(v);
  heap_up(heap_.size() - 1);
}

void Solver::heap_up(std::size_t i) {
  const auto v = heap_[i];
  while (i > 0) {
    const auto parent = (i - 1) / 2;
    if (!heap_less(v, heap_[parent])) break;
    heap_[i] = heap_[parent];
    heap_pos_[heap_[i]] = static_cast<std::int64_t>(i);
    i = parent;
  }
  heap_[i] = v;
  heap_pos_[v] = static_cast<std::int64_t>(i);
}

void Solver::heap_down(std::size_t i) {
  const auto v = heap_[i];
  for (;;) {
    const auto left = 2 * i + 1;
    if (left >= heap_.size()) break;
    const auto right = left + 1;
    const auto child = (right < heap_.size() && heap_less(heap_[right], heap_[left])) ? right : left;
    if (!heap_less(heap_[child], v)) break;
    heap_[i] = heap_[child];
    heap_pos_[heap_[i]] = static_cast<std::int64_t>(i);
    i = child;
  }
  heap_[i] = v;
  heap_pos_[v] = static_cast<std::int64_t>(i);
}

std::uint32_t Solver::heap_pop() {
  const auto top = heap_[0];
  heap_pos_[top] = -1;
  const auto last = heap_.back();
  heap_.pop_back();
  if (!heap_.empty()) {
    heap_[0] = last;
    heap_pos_[last] = 0;
    heap_down(0);
  }
  return top;
}

SatResult solve(const CnfFormula& f, std::span<const Lit> assumptions, SolverOptions options) {
  Solver solver(options);
  solver.add_formula(f);
  return solver.solve(assumptions);
}

}  // namespace bms
