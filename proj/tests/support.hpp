#pragma once

// Generators and independent oracles shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bms/circuit.hpp"
#include "bms/cnf.hpp"
#include "bms/encode.hpp"
#include "bms/ir.hpp"
#include "bms/verify.hpp"

namespace bms::testing {

using Rng = std::mt19937_64;

inline std::uint32_t pick(Rng& rng, std::uint32_t n) { return std::uniform_int_distribution<std::uint32_t>(0, n - 1)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

// ---------------------------------------------------------------------------
// Random models

struct ModelShape {
  std::uint32_t min_machines = 1;
  std::uint32_t max_machines = 3;
  std::uint32_t max_indexed = 2;
  std::uint32_t max_scalars = 1;
  std::uint32_t max_params = 3;
  std::uint32_t max_domain = 4;
  std::uint32_t max_rules = 3;
  std::uint32_t expr_depth = 2;
  bool allow_fixed = true;
  bool allow_share = true;
  std::optional<std::uint32_t> total_vars;  // exact variable count when set
};

class ModelGen {
 public:
  ModelGen(Rng& rng, ModelShape shape) : rng_(rng), shape_(shape) {}

  TemplateModel make() {
    for (;;) {
      auto m = attempt();
      try {
        validate(m);
        return m;
      } catch (const ModelError&) {
      }
    }
  }

 private:
  TemplateModel attempt() {
    TemplateModel m;
    m.name = "rand" + std::to_string(pick(rng_, 1000));
    m.machines = shape_.min_machines + pick(rng_, shape_.max_machines - shape_.min_machines + 1);
    m.ring = m.machines > 1 && coin(rng_, 0.7);
    static const char* kIndexed[] = {"A", "B", "C"};
    static const char* kScalars[] = {"s", "t"};
    if (shape_.total_vars) {
      // Fill the requested count with indexed families first, then scalars.
      std::uint32_t left = *shape_.total_vars;
      std::uint32_t fam = 0;
      if (coin(rng_)) {
        while (left >= m.machines && fam < 3 && coin(rng_, 0.8)) {
          add_family(m, kIndexed[fam++], true);
          left -= m.machines;
        }
      }
      for (std::uint32_t k = 0; k < left; ++k) add_family(m, "s" + std::to_string(k), false);
    } else {
      const auto n_idx = 1 + pick(rng_, shape_.max_indexed);
      for (std::uint32_t f = 0; f < n_idx; ++f) add_family(m, kIndexed[f], true);
      const auto n_sc = pick(rng_, shape_.max_scalars + 1);
      for (std::uint32_t f = 0; f < n_sc; ++f) add_family(m, kScalars[f], false);
    }
    if (shape_.allow_fixed) {
      for (std::uint32_t v = 0; v < m.var_count(); ++v) {
        if (coin(rng_, 0.15)) m.fixed[v] = coin(rng_);
      }
    }
    const auto n_params = pick(rng_, shape_.max_params + 1);
    for (std::uint32_t p = 0; p < n_params; ++p) {
      ChoiceParam param;
      param.name = "p" + std::to_string(p);
      const auto size = 1 + pick(rng_, shape_.max_domain);
      for (std::uint32_t k = 0; k < size; ++k) param.domain.push_back(local_expr(m, shape_.expr_depth, false));
      m.params.push_back(std::move(param));
    }
    m.init = absolute_expr(m, shape_.expr_depth);
    const auto n_rules = 1 + pick(rng_, shape_.max_rules);
    for (std::uint32_t r = 0; r < n_rules; ++r) {
      Rule rule;
      rule.name = "r" + std::to_string(r);
      rule.owner = pick(rng_, m.machines);
      rule.guard = local_expr(m, shape_.expr_depth, true);
      std::vector<VarId> writable;
      for (const auto v : m.owned_vars(rule.owner)) {
        if (m.can_write(rule.owner, v)) writable.push_back(v);
      }
      // A rule without updates is never enabled and has no text form.
      if (writable.empty()) continue;
      std::shuffle(writable.begin(), writable.end(), rng_);
      const auto n_upd = 1 + pick(rng_, static_cast<std::uint32_t>(std::min<std::size_t>(writable.size(), 2)));
      for (std::uint32_t k = 0; k < n_upd; ++k) rule.updates.push_back({writable[k], local_expr(m, shape_.expr_depth, true)});
      m.rules.push_back(std::move(rule));
    }
    if (shape_.allow_share && !m.rules.empty() && m.machines > 1 && coin(rng_, 0.3)) {
      const auto from = m.rules[0].owner;
      auto to = pick(rng_, m.machines);
      if (to == from) to = (to + 1) % m.machines;
      share_rules(m, from, to);
    }
    return m;
  }

  Expr leaf(const TemplateModel& m, bool local) {
    const auto roll = pick(rng_, 10);
    if (roll == 0) return Expr::constant(coin(rng_));
    const auto f = pick(rng_, static_cast<std::uint32_t>(m.families.size()));
    if (local && roll < 8 && m.families[f].indexed) {
      Neighbor where = Neighbor::Self;
      if (m.ring) where = static_cast<Neighbor>(static_cast<int>(pick(rng_, 3)) - 1);
      return Expr::local(f, where);
    }
    const auto base = m.family_base(f).index;
    const auto count = m.families[f].indexed ? m.machines : 1;
    return Expr::var(VarId{base + pick(rng_, count)});
  }

  Expr tree(const TemplateModel& m, std::uint32_t depth, bool local, bool choice) {
    if (choice && !m.params.empty() && coin(rng_, 0.3)) return Expr::choice(ParamId{pick(rng_, static_cast<std::uint32_t>(m.params.size()))});
    if (depth == 0 || coin(rng_, 0.35)) return leaf(m, local);
    switch (pick(rng_, 4)) {
      case 0:
        return !tree(m, depth - 1, local, choice);
      case 1:
        return tree(m, depth - 1, local, choice) && tree(m, depth - 1, local, choice);
      case 2:
        return tree(m, depth - 1, local, choice) || tree(m, depth - 1, local, choice);
      default:
        return Expr::equality(tree(m, depth - 1, local, choice), tree(m, depth - 1, local, choice));
    }
  }

  Expr local_expr(const TemplateModel& m, std::uint32_t depth, bool choice) { return tree(m, depth, true, choice); }
  Expr absolute_expr(const TemplateModel& m, std::uint32_t depth) { return tree(m, depth, false, false); }

  Rng& rng_;
  ModelShape shape_;
};

// ---------------------------------------------------------------------------
// Random CNF and a brute-force oracle

inline CnfFormula random_3cnf(Rng& rng, std::uint32_t vars, std::uint32_t clauses) {
  CnfFormula f;
  f.num_vars = vars;
  for (std::uint32_t c = 0; c < clauses; ++c) {
    Clause clause;
    for (int k = 0; k < 3; ++k) {
      const auto v = static_cast<Lit>(1 + pick(rng, vars));
      clause.push_back(coin(rng) ? v : -v);
    }
    f.add(std::move(clause));
  }
  return f;
}

inline bool brute_force_sat(const CnfFormula& f) {
  const auto n = f.num_vars;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> masks;  // (positive, negative)
  for (const auto& c : f.clauses) {
    std::uint32_t pos = 0, neg = 0;
    for (const auto l : c) (l > 0 ? pos : neg) |= 1U << (std::abs(l) - 1);
    masks.emplace_back(pos, neg);
  }
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << n); ++a) {
    const auto x = static_cast<std::uint32_t>(a);
    bool ok = true;
    for (const auto& [pos, neg] : masks) {
      if ((x & pos) == 0 && (~x & neg) == 0) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Random graphs and a lasso-enumeration oracle for FG

struct RandomGraph {
  StateGraph graph;
  std::vector<bool> phi;
};

inline RandomGraph random_graph(Rng& rng, std::uint32_t max_nodes) {
  RandomGraph out;
  const auto n = 1 + pick(rng, max_nodes);
  const double density = 0.05 + 0.35 * std::uniform_real_distribution<double>(0, 1)(rng);
  auto& g = out.graph;
  for (std::uint32_t i = 0; i < n; ++i) g.nodes.push_back(State(i));
  g.succ.resize(n);
  g.enabled.assign(n, 0);
  g.initial.assign(n, false);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      if (coin(rng, density)) g.succ[i].push_back(j);
    }
    g.enabled[i] = static_cast<std::uint32_t>(g.succ[i].size());
    g.initial[i] = coin(rng, 0.3);
    out.phi.push_back(coin(rng, 0.7));
  }
  g.initial[pick(rng, n)] = true;
  return out;
}

/// FG(phi) fails iff some path from an initial node reaches a cycle through a
/// node violating phi. Lassos are enumerated explicitly as simple paths plus a
/// closing edge (prefix plus cycle at most |nodes|); a node without successors
/// loops on itself.
inline bool oracle_afg_fails(const StateGraph& g, const std::vector<bool>& phi) {
  const auto n = g.nodes.size();
  auto next = [&](std::uint32_t v) {
    return g.succ[v].empty() ? std::vector<std::uint32_t>{v} : g.succ[v];
  };
  std::vector<std::uint32_t> path;
  std::function<bool()> extend = [&]() -> bool {
    const auto last = path.back();
    for (const auto w : next(last)) {
      // Closing edge back into the path: the cycle is path[i..].
      for (std::size_t i = 0; i < path.size(); ++i) {
        if (path[i] != w) continue;
        for (std::size_t k = i; k < path.size(); ++k) {
          if (!phi[path[k]]) return true;
        }
      }
    }
    if (path.size() >= n + 1) return false;
    for (const auto w : next(last)) {
      // A lasso with a repeated node implies one along a simple path.
      if (std::find(path.begin(), path.end(), w) != path.end()) continue;
      path.push_back(w);
      if (extend()) return true;
      path.pop_back();
    }
    return false;
  };
  for (std::uint32_t v = 0; v < n; ++v) {
    if (!g.initial[v]) continue;
    path = {v};
    if (extend()) return true;
  }
  return false;
}

/// The lasso walks graph edges from an initial node and its cycle closes
/// through a node violating phi.
inline bool lasso_is_witness(const StateGraph& g, const std::vector<bool>& phi, const Lasso& l) {
  if (l.cycle.empty()) return false;
  std::vector<std::uint32_t> path;
  for (const auto s : l.prefix) path.push_back(*g.find(s));
  for (const auto s : l.cycle) path.push_back(*g.find(s));
  if (!g.initial[path.front()]) return false;
  auto edge = [&](std::uint32_t a, std::uint32_t b) {
    if (g.succ[a].empty()) return a == b;
    return std::find(g.succ[a].begin(), g.succ[a].end(), b) != g.succ[a].end();
  };
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!edge(path[i], path[i + 1])) return false;
  }
  if (!edge(path.back(), *g.find(l.cycle.front()))) return false;
  return std::any_of(l.cycle.begin(), l.cycle.end(), [&](State s) { return !phi[*g.find(s)]; });
}

// ---------------------------------------------------------------------------
// Bit-parallel circuit evaluation: 64 input assignments per pass.

inline std::uint64_t eval64(const Circuit& c, Circuit::Edge root, const std::vector<std::uint64_t>& inputs) {
  const auto order = c.cone(root);
  std::vector<std::uint64_t> value(c.node_count(), 0);
  auto edge = [&](Circuit::Edge e) {
    const auto v = value[Circuit::node_of(e)];
    return Circuit::is_negated(e) ? ~v : v;
  };
  for (const auto n : order) {
    switch (c.kind(n)) {
      case Circuit::NodeKind::Const:
        value[n] = 0;
        break;
      case Circuit::NodeKind::Input:
        value[n] = inputs[c.input_index(n)];
        break;
      case Circuit::NodeKind::And: {
        std::uint64_t acc = ~std::uint64_t{0};
        for (const auto f : c.fanins(n)) acc &= edge(f);
        value[n] = acc;
        break;
      }
      case Circuit::NodeKind::Xor: {
        std::uint64_t acc = 0;
        for (const auto f : c.fanins(n)) acc ^= edge(f);
        value[n] = acc;
        break;
      }
    }
  }
  return edge(root);
}

// ---------------------------------------------------------------------------
// Interpreter-side meaning of an unrolling input assignment.

/// True iff `inputs` describe an in-range instantiation and a run of it that
/// violates the unrolling's property. Uses only the interpreter.
inline bool interpreter_violation(const Unrolling& u, const std::vector<bool>& inputs) {
  const auto& m = u.prepared.model;
  // Selector bits back to choices.
  Instantiation inst;
  std::vector<State> states(u.depth + 1, m.fixed_base());
  std::vector<std::vector<bool>> sel(u.depth, std::vector<bool>(m.rules.size(), false));
  inst.choice.assign(m.params.size(), 0);
  for (std::size_t i = 0; i < u.map.inputs.size(); ++i) {
    const auto& info = u.map.inputs[i];
    switch (info.kind) {
      case InputInfo::Kind::ParamBit:
        if (inputs[i]) inst.choice[info.index] |= 1U << info.step;
        break;
      case InputInfo::Kind::State:
        states[info.step] = states[info.step].with(VarId{info.index}, inputs[i]);
        break;
      case InputInfo::Kind::Select:
        sel[info.step][info.index] = inputs[i];
        break;
    }
  }
  for (std::size_t p = 0; p < m.params.size(); ++p) {
    if (inst.choice[p] >= m.params[p].domain.size()) return false;
  }
  if (!eval_expr(m, m.init, states[0], inst)) return false;
  auto dead = [&](State s) { return enabled_count(m, s, inst) == 0; };
  for (std::uint32_t t = 0; t < u.depth; ++t) {
    std::vector<std::uint32_t> chosen;
    for (std::uint32_t r = 0; r < m.rules.size(); ++r) {
      if (sel[t][r]) chosen.push_back(r);
    }
    if (chosen.size() > 1) return false;
    if (chosen.empty()) {
      if (!dead(states[t]) || states[t + 1] != states[t]) return false;
    } else {
      const auto& rule = m.rules[chosen[0]];
      if (!rule_enabled(m, rule, states[t], inst)) return false;
      if (apply_rule(m, rule, states[t], inst) != states[t + 1]) return false;
    }
  }
  const auto& prop = u.prop;
  for (std::uint32_t j = prop.from; j <= prop.to; ++j) {
    if (!predicate_holds(u.prepared, prop.predicate, inst, states[j])) return true;
  }
  return prop.to > 0 && dead(states[prop.to - 1]);
}

// ---------------------------------------------------------------------------
// Independent syntax lint for DIMACS / QDIMACS text.

struct LintResult {
  bool ok = true;
  std::string message;
};

inline LintResult lint_dimacs(const std::string& text, bool qdimacs) {
  auto fail = [](std::string msg) { return LintResult{false, std::move(msg)}; };
  std::istringstream in(text);
  std::string line;
  long vars = -1, clauses = -1, seen_clauses = 0;
  bool in_prefix = true;
  char last_quant = 0;
  std::set<long> quantified;
  while (std::getline(in, line)) {
    if (line.empty()) return fail("empty line");
    if (line[0] == 'c') {
      if (vars >= 0) return fail("comment after header");
      continue;
    }
    std::istringstream ls(line);
    if (line[0] == 'p') {
      std::string p, kind;
      if (vars >= 0) return fail("second header");
      if (!(ls >> p >> kind >> vars >> clauses) || kind != "cnf" || vars < 0 || clauses < 0) return fail("bad header");
      std::string rest;
      if (ls >> rest) return fail("trailing header tokens");
      continue;
    }
    if (vars < 0) return fail("data before header");
    if (line[0] == 'a' || line[0] == 'e') {
      if (!qdimacs) return fail("quantifier in DIMACS");
      if (!in_prefix) return fail("quantifier after clauses");
      if (line[0] == last_quant) return fail("repeated quantifier block kind");
      last_quant = line[0];
      std::string q;
      ls >> q;
      long v = 0;
      bool terminated = false;
      std::size_t count = 0;
      while (ls >> v) {
        if (v == 0) {
          terminated = true;
          break;
        }
        if (v < 0 || v > vars) return fail("quantified variable out of range");
        if (!quantified.insert(v).second) return fail("variable quantified twice");
        ++count;
      }
      if (!terminated) return fail("unterminated quantifier line");
      if (count == 0) return fail("empty quantifier block");
      std::string rest;
      if (ls >> rest) return fail("tokens after 0");
      continue;
    }
    in_prefix = false;
    long l = 0;
    bool terminated = false;
    while (ls >> l) {
      if (l == 0) {
        terminated = true;
        break;
      }
      if (std::abs(l) > vars) return fail("literal out of range");
    }
    if (!terminated) return fail("unterminated clause");
    std::string rest;
    if (ls >> rest) return fail("tokens after 0");
    ++seen_clauses;
  }
  if (vars < 0) return fail("missing header");
  if (seen_clauses != clauses) return fail("clause count mismatch");
  return {};
}

}  // namespace bms::testing
