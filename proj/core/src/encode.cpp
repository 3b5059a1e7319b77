#include "bms/encode.hpp"

#include <bit>
#include <stdexcept>

#include "bms/tseitin.hpp"

namespace bms {

std::string Predicate::name() const {
  switch (kind) {
    case PredicateKind::Legitimate:
      return "legitimate";
    case PredicateKind::LegitimateAndMoved:
      return "legitimate_and_M";
    case PredicateKind::Formula:
      return "formula";
  }
  return "?";
}

PropertyMode PropertyMode::hold(std::uint32_t c, std::uint32_t k, Predicate p) {
  if (k < c) throw std::invalid_argument("hold-from: last step precedes first step");
  return {Kind::HoldFrom, c, k, std::move(p)};
}

std::string PropertyMode::describe() const {
  if (kind == Kind::AtStep) return "at(" + std::to_string(from) + ")";
  return "hold(" + std::to_string(from) + ".." + std::to_string(to) + ")";
}

PreparedModel prepare(const TemplateModel& m, const Predicate& p) {
  if (!p.needs_moved()) return {m, Expr::constant(true)};
  auto aug = augment_moved(m);
  return {std::move(aug.model), std::move(aug.all_moved)};
}

bool predicate_holds(const PreparedModel& pm, const Predicate& p, const Instantiation& inst, State s) {
  switch (p.kind) {
    case PredicateKind::Legitimate:
      return legitimate(pm.model, inst, s);
    case PredicateKind::LegitimateAndMoved:
      return legitimate(pm.model, inst, s) && eval_expr(pm.model, pm.all_moved, s, inst);
    case PredicateKind::Formula:
      return eval_expr(pm.model, p.formula, s, inst);
  }
  return false;
}

std::uint32_t selector_bits(std::size_t domain_size) {
  if (domain_size <= 1) return 0;
  return static_cast<std::uint32_t>(std::bit_width(domain_size - 1));
}

std::size_t StepVarMap::param_bit_count() const {
  std::size_t n = 0;
  for (const auto& bits : param_bits) n += bits.size();
  return n;
}

std::uint32_t StepVarMap::input_of(const Circuit& c, Circuit::Edge e) { return c.input_index(Circuit::node_of(e)); }

namespace {

using Edge = Circuit::Edge;
using Edges = std::vector<Edge>;

struct StepRules {
  Edges enabled;
  std::vector<Edges> next;
  Edge dead = Circuit::kTrue;
};

// Encodes model expressions over caller-supplied state edges.
class Builder {
 public:
  Builder(Circuit& c, const PreparedModel& pm, const std::vector<Edges>& param_bits)
      : c_(c), pm_(pm), m_(pm.model), param_bits_(param_bits) {}

  Edge expr(const Expr& e, const Edges& state, std::optional<std::uint32_t> owner) {
    switch (e.kind()) {
      case ExprKind::Const:
        return e.const_value() ? Circuit::kTrue : Circuit::kFalse;
      case ExprKind::Var:
        return state[e.var_id().index];
      case ExprKind::Local:
        if (!owner) throw ModelError("owner-relative reference outside a rule");
        return state[m_.resolve_local(e.family(), e.neighbor(), *owner).index];
      case ExprKind::Not:
        return Circuit::negate(expr(e.children()[0], state, owner));
      case ExprKind::And:
        return c_.make_and(expr(e.children()[0], state, owner), expr(e.children()[1], state, owner));
      case ExprKind::Or:
        return c_.make_or(expr(e.children()[0], state, owner), expr(e.children()[1], state, owner));
      case ExprKind::Eq:
        return c_.make_eq(expr(e.children()[0], state, owner), expr(e.children()[1], state, owner));
      case ExprKind::Choice: {
        const auto p = e.param().index;
        const auto& domain = m_.params[p].domain;
        Edges alts;
        for (std::uint32_t k = 0; k < domain.size(); ++k) {
          alts.push_back(c_.make_and(selects(p, k), expr(domain[k], state, owner)));
        }
        return c_.make_or(alts);
      }
    }
    return Circuit::kFalse;
  }

  // Selector of param p equals k.
  Edge selects(std::uint32_t p, std::uint32_t k) {
    const auto& bits = param_bits_[p];
    Edges lits;
    for (std::size_t b = 0; b < bits.size(); ++b) lits.push_back(((k >> b) & 1U) ? bits[b] : Circuit::negate(bits[b]));
    return c_.make_and(lits);
  }

  Edge in_range() {
    Edges parts;
    for (std::uint32_t p = 0; p < m_.params.size(); ++p) {
      const auto& bits = param_bits_[p];
      const std::uint64_t size = m_.params[p].domain.size();
      if (size >= (std::uint64_t{1} << bits.size())) continue;
      Edge lt = Circuit::kFalse;  // bits[0..b] < size[0..b]
      for (std::size_t b = 0; b < bits.size(); ++b) {
        lt = ((size >> b) & 1U) ? c_.make_or(Circuit::negate(bits[b]), lt) : c_.make_and(Circuit::negate(bits[b]), lt);
      }
      parts.push_back(lt);
    }
    return c_.make_and(parts);
  }

  StepRules rules(const Edges& state) {
    StepRules out;
    Edges not_enabled;
    for (const auto& r : m_.rules) {
      const Edge guard = expr(r.guard, state, r.owner);
      Edges next = state;
      Edges changes;
      for (const auto& u : r.updates) {
        const Edge value = expr(u.value, state, r.owner);
        next[u.target.index] = value;
        if (!m_.is_history(u.target)) changes.push_back(c_.make_xor(value, state[u.target.index]));
      }
      const Edge enabled = c_.make_and(guard, c_.make_or(changes));
      out.enabled.push_back(enabled);
      out.next.push_back(std::move(next));
      not_enabled.push_back(Circuit::negate(enabled));
    }
    out.dead = c_.make_and(not_enabled);
    return out;
  }

  Edge same(const Edges& a, const Edges& b) {
    Edges eqs;
    for (std::size_t v = 0; v < a.size(); ++v) eqs.push_back(c_.make_eq(a[v], b[v]));
    return c_.make_and(eqs);
  }

  Edge predicate(const Predicate& p, const Edges& state, const StepRules& rules) {
    switch (p.kind) {
      case PredicateKind::Legitimate:
        return c_.exactly_one(rules.enabled);
      case PredicateKind::LegitimateAndMoved:
        return c_.make_and(c_.exactly_one(rules.enabled), expr(pm_.all_moved, state, std::nullopt));
      case PredicateKind::Formula:
        return expr(p.formula, state, std::nullopt);
    }
    return Circuit::kFalse;
  }

  // Some step of the run from `cur` to `nxt`, with the rule choice left to
  // the circuit (disjunction over rules).
  Edge step_any(const Edges& cur, const StepRules& rules, const Edges& nxt) {
    Edges alts;
    for (std::size_t r = 0; r < rules.enabled.size(); ++r) {
      alts.push_back(c_.make_and(rules.enabled[r], same(rules.next[r], nxt)));
    }
    alts.push_back(c_.make_and(rules.dead, same(cur, nxt)));
    return c_.make_or(alts);
  }

  // The same step driven by explicit one-hot select inputs.
  Edge step_selected(const Edges& cur, const StepRules& rules, const Edges& nxt, const Edges& sel) {
    Edges parts{c_.at_most_one(sel)};
    for (std::size_t r = 0; r < sel.size(); ++r) {
      parts.push_back(c_.make_implies(sel[r], c_.make_and(rules.enabled[r], same(rules.next[r], nxt))));
    }
    Edges none;
    for (const auto s : sel) none.push_back(Circuit::negate(s));
    parts.push_back(c_.make_implies(c_.make_and(none), c_.make_and(rules.dead, same(cur, nxt))));
    return c_.make_and(parts);
  }

  // The run violates the bounded property: the predicate fails at a checked
  // step, or the run deadlocked before the last checked step.
  Edge bad(const PropertyMode& prop, const std::vector<Edges>& states, const std::vector<StepRules>& rules) {
    Edges alts;
    for (std::uint32_t j = prop.from; j <= prop.to; ++j) {
      alts.push_back(Circuit::negate(predicate(prop.predicate, states[j], rules[j])));
    }
    if (prop.to > 0) alts.push_back(rules[prop.to - 1].dead);
    return c_.make_or(alts);
  }

  Edge init(const Edges& state) { return expr(m_.init, state, std::nullopt); }

 private:
  Circuit& c_;
  const PreparedModel& pm_;
  const TemplateModel& m_;
  const std::vector<Edges>& param_bits_;
};

Edges constant_state(const TemplateModel& m, State s) {
  Edges out(m.var_count());
  for (std::uint32_t v = 0; v < m.var_count(); ++v) {
    const bool value = m.fixed[v] ? *m.fixed[v] : s.get(VarId{v});
    out[v] = value ? Circuit::kTrue : Circuit::kFalse;
  }
  return out;
}

std::vector<Edges> add_param_inputs(Circuit& c, const TemplateModel& m, std::vector<InputInfo>* infos) {
  std::vector<Edges> bits(m.params.size());
  for (std::uint32_t p = 0; p < m.params.size(); ++p) {
    const auto n = selector_bits(m.params[p].domain.size());
    for (std::uint32_t b = 0; b < n; ++b) {
      bits[p].push_back(c.add_input());
      if (infos) infos->push_back({InputInfo::Kind::ParamBit, p, b});
    }
  }
  return bits;
}

}  // namespace

Unrolling unroll(const TemplateModel& m, const PropertyMode& prop, std::optional<std::uint32_t> depth) {
  Unrolling u;
  u.prepared = prepare(m, prop.predicate);
  u.prop = prop;
  u.depth = depth.value_or(prop.last_step());
  if (u.depth < prop.last_step()) throw std::invalid_argument("unroll depth is smaller than the property's last step");
  const auto& model = u.prepared.model;
  if (model.var_count() > kMaxStateVars) throw ModelError("too many state variables");
  auto& c = u.circuit;
  auto& map = u.map;

  map.param_bits = add_param_inputs(c, model, &map.inputs);
  for (std::uint32_t t = 0; t <= u.depth; ++t) {
    Edges state(model.var_count());
    for (std::uint32_t v = 0; v < model.var_count(); ++v) {
      if (model.fixed[v]) {
        state[v] = *model.fixed[v] ? Circuit::kTrue : Circuit::kFalse;
      } else {
        state[v] = c.add_input();
        map.inputs.push_back({InputInfo::Kind::State, v, t});
      }
    }
    map.state.push_back(std::move(state));
    if (t == u.depth) break;
    Edges sel;
    for (std::uint32_t r = 0; r < model.rules.size(); ++r) {
      sel.push_back(c.add_input());
      map.inputs.push_back({InputInfo::Kind::Select, r, t});
    }
    map.select.push_back(std::move(sel));
  }

  Builder b(c, u.prepared, map.param_bits);
  std::vector<StepRules> rules;
  for (const auto& state : map.state) rules.push_back(b.rules(state));
  Edges parts{b.in_range(), b.init(map.state[0])};
  u.in_range = parts[0];
  for (std::uint32_t t = 0; t < u.depth; ++t) {
    parts.push_back(b.step_selected(map.state[t], rules[t], map.state[t + 1], map.select[t]));
  }
  parts.push_back(b.bad(prop, map.state, rules));
  u.violation = c.make_and(parts);
  return u;
}

std::vector<bool> inputs_from_model(const Unrolling& u, const std::vector<bool>& model) {
  std::vector<bool> inputs(u.circuit.input_count());
  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i] = i + 1 < model.size() && model[i + 1];
  return inputs;
}

TraceWitness decode_trace(const Unrolling& u, const std::vector<bool>& inputs) {
  const auto& model = u.prepared.model;
  auto value = [&](Edge e) {
    if (Circuit::is_const(e)) return e == Circuit::kTrue;
    return static_cast<bool>(inputs[StepVarMap::input_of(u.circuit, e)]);
  };
  TraceWitness trace;
  for (const auto& state : u.map.state) {
    State s;
    for (std::uint32_t v = 0; v < model.var_count(); ++v) s = s.with(VarId{v}, value(state[v]));
    trace.states.push_back(s);
  }
  for (const auto& sel : u.map.select) {
    std::optional<std::uint32_t> fired;
    for (std::uint32_t r = 0; r < sel.size(); ++r) {
      if (value(sel[r])) {
        fired = r;
        break;
      }
    }
    trace.fired.push_back(fired);
  }
  return trace;
}

Instantiation decode_instantiation(const Unrolling& u, const std::vector<bool>& inputs) {
  Instantiation inst;
  for (const auto& bits : u.map.param_bits) {
    std::uint32_t k = 0;
    for (std::size_t b = 0; b < bits.size(); ++b) {
      if (inputs[StepVarMap::input_of(u.circuit, bits[b])]) k |= 1U << b;
    }
    inst.choice.push_back(k);
  }
  return inst;
}

void encode_instantiation(const Unrolling& u, const Instantiation& inst, std::vector<bool>& inputs) {
  if (inst.choice.size() != u.map.param_bits.size()) throw PartialInstantiation("instantiation does not match the model");
  for (std::size_t p = 0; p < inst.choice.size(); ++p) {
    const auto& bits = u.map.param_bits[p];
    for (std::size_t b = 0; b < bits.size(); ++b) inputs[StepVarMap::input_of(u.circuit, bits[b])] = (inst.choice[p] >> b) & 1U;
  }
}

std::vector<bool> encode_inputs(const Unrolling& u, const Instantiation& inst, const TraceWitness& trace) {
  if (trace.states.size() != u.depth + 1 || trace.fired.size() != u.depth) throw std::invalid_argument("trace length does not match the unrolling");
  std::vector<bool> inputs(u.circuit.input_count());
  encode_instantiation(u, inst, inputs);
  for (std::uint32_t i = 0; i < u.map.inputs.size(); ++i) {
    const auto& info = u.map.inputs[i];
    if (info.kind == InputInfo::Kind::State) {
      inputs[i] = trace.states[info.step].get(VarId{info.index});
    } else if (info.kind == InputInfo::Kind::Select) {
      inputs[i] = trace.fired[info.step] == info.index;
    }
  }
  return inputs;
}

CnfFormula to_bmc_cnf(const Unrolling& u) { return tseitin(u.circuit, u.violation).cnf; }

QbfProblem to_qbf(const Unrolling& u) {
  QbfProblem q;
  Circuit c = u.circuit;
  q.matrix = tseitin(c, c.make_implies(u.in_range, u.violation)).cnf;
  std::vector<char> universal(q.matrix.num_vars + 1, 0);
  for (std::uint32_t i = 0; i < u.map.inputs.size(); ++i) {
    if (u.map.inputs[i].kind == InputInfo::Kind::ParamBit) {
      q.universals.push_back(static_cast<int>(i + 1));
      universal[i + 1] = 1;
    }
  }
  for (std::uint32_t v = 1; v <= q.matrix.num_vars; ++v) {
    if (!universal[v]) q.existentials.push_back(static_cast<int>(v));
  }
  return q;
}

std::string write_qdimacs(const QbfProblem& q) {
  std::string out = "p cnf " + std::to_string(q.matrix.num_vars) + " " + std::to_string(q.matrix.clauses.size()) + "\n";
  auto block = [&](char tag, const std::vector<int>& vars) {
    if (vars.empty()) return;
    out += tag;
    for (const int v : vars) out += " " + std::to_string(v);
    out += " 0\n";
  };
  block('a', q.universals);
  block('e', q.existentials);
  for (const auto& clause : q.matrix.clauses) {
    for (const Lit l : clause) out += std::to_string(l) + " ";
    out += "0\n";
  }
  return out;
}

std::string write_var_map(const Unrolling& u) {
  const auto& model = u.prepared.model;
  std::string out;
  for (std::uint32_t i = 0; i < u.map.inputs.size(); ++i) {
    const auto& info = u.map.inputs[i];
    switch (info.kind) {
      case InputInfo::Kind::ParamBit:
        out += "param " + model.params[info.index].name + " bit " + std::to_string(info.step);
        break;
      case InputInfo::Kind::State:
        out += "state " + model.var_name(VarId{info.index}) + " @ " + std::to_string(info.step);
        break;
      case InputInfo::Kind::Select:
        out += "select " + std::to_string(info.index) + " " + model.rules[info.index].name + " owner " +
               std::to_string(model.rules[info.index].owner) + " @ " + std::to_string(info.step);
        break;
    }
    out += " = " + std::to_string(i + 1) + "\n";
  }
  return out;
}

ParamCircuit cofactor_params(const Unrolling& u, const TraceWitness& trace) {
  ParamCircuit out;
  const auto values = encode_inputs(u, Instantiation{std::vector<std::uint32_t>(u.map.param_bits.size(), 0)}, trace);
  Edges input_map(u.circuit.input_count());
  for (std::uint32_t i = 0; i < input_map.size(); ++i) {
    if (u.map.inputs[i].kind == InputInfo::Kind::ParamBit) {
      input_map[i] = out.circuit.add_input();
    } else {
      input_map[i] = values[i] ? Circuit::kTrue : Circuit::kFalse;
    }
  }
  out.root = copy_cone(u.circuit, u.violation, out.circuit, input_map);
  return out;
}

RefinementCircuit::RefinementCircuit(const Unrolling& u) : u_(u) {
  bits_ = add_param_inputs(circuit_, u.prepared.model, nullptr);
}

Circuit::Edge RefinementCircuit::in_range() {
  Builder b(circuit_, u_.prepared, bits_);
  return b.in_range();
}

Circuit::Edge RefinementCircuit::state_sequence(const std::vector<State>& states) {
  if (states.size() != u_.depth + 1) throw std::invalid_argument("state sequence length does not match the unrolling");
  const auto& model = u_.prepared.model;
  Builder b(circuit_, u_.prepared, bits_);
  std::vector<Edges> state;
  std::vector<StepRules> rules;
  for (const auto s : states) {
    state.push_back(constant_state(model, s));
    rules.push_back(b.rules(state.back()));
  }
  Edges parts{b.in_range(), b.init(state[0])};
  for (std::uint32_t t = 0; t < u_.depth; ++t) parts.push_back(b.step_any(state[t], rules[t], state[t + 1]));
  parts.push_back(b.bad(u_.prop, state, rules));
  return circuit_.make_and(parts);
}

Circuit::Edge RefinementCircuit::scheduled_run(const TraceWitness& trace) {
  if (trace.states.empty()) throw std::invalid_argument("empty trace");
  auto& c = circuit_;
  const auto& model = u_.prepared.model;
  Builder b(c, u_.prepared, bits_);
  const auto n = static_cast<std::uint32_t>(model.rules.size());
  const auto steps = u_.prop.last_step();
  std::vector<Edges> state{constant_state(model, trace.states[0])};
  std::vector<StepRules> rules;
  for (std::uint32_t t = 0; t <= steps; ++t) {
    rules.push_back(b.rules(state[t]));
    if (t == steps) break;
    // Fire the first enabled rule at or after the preferred one, cyclically.
    const std::uint32_t first = (t < trace.fired.size() && trace.fired[t]) ? *trace.fired[t] : 0;
    const auto& step = rules.back();
    Edges next(model.var_count(), Circuit::kFalse);
    Edges skipped;
    for (std::uint32_t k = 0; k < n; ++k) {
      const auto r = (first + k) % n;
      Edges chosen_parts = skipped;
      chosen_parts.push_back(step.enabled[r]);
      const Edge chosen = c.make_and(chosen_parts);
      for (std::uint32_t v = 0; v < model.var_count(); ++v) {
        next[v] = c.make_or(next[v], c.make_and(chosen, step.next[r][v]));
      }
      skipped.push_back(Circuit::negate(step.enabled[r]));
    }
    for (std::uint32_t v = 0; v < model.var_count(); ++v) {
      next[v] = c.make_or(next[v], c.make_and(step.dead, state[t][v]));
    }
    state.push_back(std::move(next));
  }
  const Edges parts{b.in_range(), b.init(state[0]), b.bad(u_.prop, state, rules)};
  return c.make_and(parts);
}

Circuit::Edge RefinementCircuit::closed(const Predicate& p) {
  if (p.needs_moved()) throw std::invalid_argument("closure predicate reads history bits");
  const auto& model = u_.prepared.model;
  Builder b(circuit_, u_.prepared, bits_);
  std::vector<VarId> free;
  for (std::uint32_t v = 0; v < model.var_count(); ++v) {
    if (!model.fixed[v] && !model.is_history(VarId{v})) free.push_back(VarId{v});
  }
  if (free.size() > 24) throw ModelError("too many state variables for a closure constraint");
  Edges parts;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free.size()); ++mask) {
    State s = model.fixed_base();
    for (std::size_t i = 0; i < free.size(); ++i) s = s.with(free[i], (mask >> i) & 1U);
    const auto state = constant_state(model, s);
    const auto rules = b.rules(state);
    Edges keeps;
    for (std::size_t r = 0; r < model.rules.size(); ++r) {
      keeps.push_back(circuit_.make_implies(rules.enabled[r], b.predicate(p, rules.next[r], b.rules(rules.next[r]))));
    }
    parts.push_back(circuit_.make_implies(b.predicate(p, state, rules), circuit_.make_and(keeps)));
  }
  return circuit_.make_and(parts);
}

Circuit::Edge RefinementCircuit::import(const ParamCircuit& pc) {
  std::vector<Edge> inputs;
  for (std::size_t i = 0; i < pc.circuit.input_count(); ++i) inputs.push_back(circuit_.input(i));
  return copy_cone(pc.circuit, pc.root, circuit_, inputs);
}

ParamCircuit state_sequence_condition(const Unrolling& u, const std::vector<State>& states) {
  RefinementCircuit rc(u);
  const auto root = rc.state_sequence(states);
  return {std::move(rc).take_circuit(), root};
}

ParamCircuit scheduled_run_condition(const Unrolling& u, const TraceWitness& trace) {
  RefinementCircuit rc(u);
  const auto root = rc.scheduled_run(trace);
  return {std::move(rc).take_circuit(), root};
}

}  // namespace bms
