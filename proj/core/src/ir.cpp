#include "bms/ir.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <utility>

namespace bms {

struct Expr::Node {
  ExprKind kind = ExprKind::Const;
  bool value = false;
  std::uint32_t id = 0;  // VarId, family or ParamId depending on kind
  Neighbor where = Neighbor::Self;
  std::vector<Expr> children;
  bool has_choice = false;
};

std::shared_ptr<const Expr::Node> Expr::const_node(bool value) {
  static const auto false_node = [] {
    auto n = std::make_shared<Expr::Node>();
    n->value = false;
    return std::shared_ptr<const Expr::Node>(n);
  }();
  static const auto true_node = [] {
    auto n = std::make_shared<Expr::Node>();
    n->value = true;
    return std::shared_ptr<const Expr::Node>(n);
  }();
  return value ? true_node : false_node;
}

Expr::Expr() : node_(const_node(false)) {}
Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::constant(bool value) { return Expr(const_node(value)); }

Expr Expr::var(VarId id) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Var;
  n->id = id.index;
  return Expr(std::move(n));
}

Expr Expr::local(std::uint32_t family, Neighbor where) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Local;
  n->id = family;
  n->where = where;
  return Expr(std::move(n));
}

Expr Expr::choice(ParamId id) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Choice;
  n->id = id.index;
  n->has_choice = true;
  return Expr(std::move(n));
}

Expr Expr::negation(Expr operand) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Not;
  n->has_choice = operand.contains_choice();
  n->children.push_back(std::move(operand));
  return Expr(std::move(n));
}

Expr Expr::conjunction(Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::And;
  n->has_choice = lhs.contains_choice() || rhs.contains_choice();
  n->children = {std::move(lhs), std::move(rhs)};
  return Expr(std::move(n));
}

Expr Expr::disjunction(Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Or;
  n->has_choice = lhs.contains_choice() || rhs.contains_choice();
  n->children = {std::move(lhs), std::move(rhs)};
  return Expr(std::move(n));
}

Expr Expr::equality(Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Eq;
  n->has_choice = lhs.contains_choice() || rhs.contains_choice();
  n->children = {std::move(lhs), std::move(rhs)};
  return Expr(std::move(n));
}

ExprKind Expr::kind() const { return node_->kind; }
bool Expr::const_value() const { return node_->value; }
VarId Expr::var_id() const { return VarId{node_->id}; }
std::uint32_t Expr::family() const { return node_->id; }
Neighbor Expr::neighbor() const { return node_->where; }
ParamId Expr::param() const { return ParamId{node_->id}; }
std::span<const Expr> Expr::children() const { return node_->children; }
bool Expr::contains_choice() const { return node_->has_choice; }

bool operator==(const Expr& lhs, const Expr& rhs) {
  if (lhs.node_ == rhs.node_) return true;
  const auto& a = *lhs.node_;
  const auto& b = *rhs.node_;
  if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
  switch (a.kind) {
    case ExprKind::Const:
      if (a.value != b.value) return false;
      break;
    case ExprKind::Var:
    case ExprKind::Choice:
      if (a.id != b.id) return false;
      break;
    case ExprKind::Local:
      if (a.id != b.id || a.where != b.where) return false;
      break;
    default:
      break;
  }
  return std::equal(a.children.begin(), a.children.end(), b.children.begin());
}

// ---------------------------------------------------------------------------

std::string TemplateModel::var_name(VarId v) const {
  const auto& info = vars.at(v.index);
  const auto& fam = families.at(info.family);
  if (!fam.indexed) return fam.name;
  return fam.name + "[" + std::to_string(*info.machine) + "]";
}

std::optional<VarId> TemplateModel::find_var(std::string_view name) const {
  for (std::uint32_t i = 0; i < vars.size(); ++i) {
    if (var_name(VarId{i}) == name) return VarId{i};
  }
  return std::nullopt;
}

std::optional<std::uint32_t> TemplateModel::find_family(std::string_view name) const {
  for (std::uint32_t i = 0; i < families.size(); ++i) {
    if (families[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<ParamId> TemplateModel::find_param(std::string_view name) const {
  for (std::uint32_t i = 0; i < params.size(); ++i) {
    if (params[i].name == name) return ParamId{i};
  }
  return std::nullopt;
}

VarId TemplateModel::family_base(std::uint32_t family) const {
  std::uint32_t base = 0;
  for (std::uint32_t f = 0; f < family; ++f) base += families[f].indexed ? machines : 1;
  return VarId{base};
}

VarId TemplateModel::resolve_local(std::uint32_t family, Neighbor where, std::uint32_t owner) const {
  const auto base = family_base(family);
  if (!families[family].indexed) return base;
  const auto n = static_cast<std::int64_t>(machines);
  const auto elem = ((static_cast<std::int64_t>(owner) + static_cast<int>(where)) % n + n) % n;
  return VarId{base.index + static_cast<std::uint32_t>(elem)};
}

bool TemplateModel::can_read(std::uint32_t machine, VarId v) const {
  const auto& info = vars.at(v.index);
  if (!info.machine || !ring) return true;
  const auto m = *info.machine;
  return m == machine || m == (machine + 1) % machines || (m + 1) % machines == machine;
}

bool TemplateModel::can_write(std::uint32_t machine, VarId v) const {
  const auto& info = vars.at(v.index);
  if (fixed.at(v.index)) return false;
  return !info.machine || *info.machine == machine;
}

std::vector<VarId> TemplateModel::owned_vars(std::uint32_t machine) const {
  std::vector<VarId> out;
  for (std::uint32_t i = 0; i < vars.size(); ++i) {
    if (!vars[i].machine || *vars[i].machine == machine) out.push_back(VarId{i});
  }
  return out;
}

std::vector<VarId> TemplateModel::readable_vars(std::uint32_t machine) const {
  std::vector<VarId> out;
  for (std::uint32_t i = 0; i < vars.size(); ++i) {
    if (can_read(machine, VarId{i})) out.push_back(VarId{i});
  }
  return out;
}

State TemplateModel::fixed_base() const {
  State s;
  for (std::uint32_t i = 0; i < fixed.size(); ++i) {
    if (fixed[i]) s = s.with(VarId{i}, *fixed[i]);
  }
  return s;
}

bool TemplateModel::fixed_consistent(State s) const {
  for (std::uint32_t i = 0; i < fixed.size(); ++i) {
    if (fixed[i] && s.get(VarId{i}) != *fixed[i]) return false;
  }
  if (vars.size() < 64 && (s.bits() >> vars.size()) != 0) return false;
  return true;
}

VarId add_family(TemplateModel& m, std::string name, bool indexed, bool history) {
  const auto family = static_cast<std::uint32_t>(m.families.size());
  const VarId first{static_cast<std::uint32_t>(m.vars.size())};
  m.families.push_back(VarFamily{std::move(name), indexed, history});
  if (indexed) {
    for (std::uint32_t i = 0; i < m.machines; ++i) m.vars.push_back(VarInfo{family, i});
  } else {
    m.vars.push_back(VarInfo{family, std::nullopt});
  }
  m.fixed.resize(m.vars.size());
  if (m.vars.size() > kMaxStateVars) throw ModelError("more than 64 state variables");
  return first;
}

void share_rules(TemplateModel& m, std::uint32_t from, std::uint32_t to) {
  if (from >= m.machines || to >= m.machines) throw ModelError("share: machine index out of range");
  if (from == to) throw ModelError("share: a machine cannot share its own rules");
  std::uint32_t group = 0;
  for (const auto& r : m.rules) {
    if (r.shared) group = std::max(group, r.shared->group + 1);
  }
  std::vector<Rule> copies;
  for (std::uint32_t i = 0; i < m.rules.size(); ++i) {
    const auto& src = m.rules[i];
    if (src.owner != from) continue;
    Rule copy = src;
    copy.owner = to;
    copy.shared = ShareOrigin{group, i};
    for (auto& u : copy.updates) {
      const auto& info = m.vars[u.target.index];
      if (info.machine) u.target = VarId{m.family_base(info.family).index + to};
    }
    copies.push_back(std::move(copy));
  }
  if (copies.empty()) throw ModelError("share: machine " + std::to_string(from) + " has no rules");
  for (auto& c : copies) m.rules.push_back(std::move(c));
}

// ---------------------------------------------------------------------------

namespace {

void check_expr(const TemplateModel& m, const Expr& e, bool allow_choice, bool allow_local,
                std::optional<std::uint32_t> reader, const std::string& where) {
  switch (e.kind()) {
    case ExprKind::Const:
      return;
    case ExprKind::Var:
      if (e.var_id().index >= m.vars.size()) throw ModelError(where + ": undeclared variable");
      if (reader && !m.can_read(*reader, e.var_id())) {
        throw ModelError(where + ": machine " + std::to_string(*reader) + " cannot read " + m.var_name(e.var_id()));
      }
      return;
    case ExprKind::Local:
      if (!allow_local) throw ModelError(where + ": owner-relative reference outside a rule");
      if (e.family() >= m.families.size()) throw ModelError(where + ": undeclared variable family");
      if (!m.families[e.family()].indexed && e.neighbor() != Neighbor::Self) {
        throw ModelError(where + ": neighbor reference to scalar " + m.families[e.family()].name);
      }
      if (e.neighbor() != Neighbor::Self && !m.ring) throw ModelError(where + ": neighbor reference without ring topology");
      return;
    case ExprKind::Choice: {
      if (!allow_choice) throw ModelError(where + ": choice hole not allowed here");
      const auto p = e.param().index;
      if (p >= m.params.size()) throw ModelError(where + ": undeclared choice parameter");
      for (const auto& d : m.params[p].domain) check_expr(m, d, false, allow_local, reader, where);
      return;
    }
    case ExprKind::Not:
      if (e.children().size() != 1) throw ModelError(where + ": negation arity");
      break;
    case ExprKind::And:
    case ExprKind::Or:
    case ExprKind::Eq:
      if (e.children().size() != 2) throw ModelError(where + ": binary operator arity");
      break;
  }
  for (const auto& c : e.children()) check_expr(m, c, allow_choice, allow_local, reader, where);
}

}  // namespace

void validate(const TemplateModel& m) {
  if (m.machines == 0) throw ModelError("model needs at least one machine");
  if (m.vars.size() > kMaxStateVars) throw ModelError("more than 64 state variables");
  if (m.fixed.size() != m.vars.size()) throw ModelError("fixed map size mismatch");
  std::set<std::string> names;
  for (const auto& f : m.families) {
    if (!names.insert(f.name).second) throw ModelError("duplicate variable family " + f.name);
  }
  for (const auto& p : m.params) {
    if (!names.insert(p.name).second) throw ModelError("duplicate identifier " + p.name);
    if (p.domain.empty()) throw ModelError("empty domain for " + p.name);
    for (const auto& d : p.domain) {
      if (d.contains_choice()) throw ModelError("nested choice in domain of " + p.name);
      check_expr(m, d, false, true, std::nullopt, "domain of " + p.name);
    }
  }
  if (m.rules.empty()) throw ModelError("model needs at least one rule");
  check_expr(m, m.init, false, false, std::nullopt, "init");
  for (const auto& r : m.rules) {
    const auto where = "rule " + r.name;
    if (r.owner >= m.machines) throw ModelError(where + ": owner out of range");
    check_expr(m, r.guard, true, true, r.owner, where);
    std::set<std::uint32_t> targets;
    for (const auto& u : r.updates) {
      if (u.target.index >= m.vars.size()) throw ModelError(where + ": undeclared update target");
      if (!targets.insert(u.target.index).second) throw ModelError(where + ": duplicate update target");
      if (m.fixed[u.target.index]) throw ModelError(where + ": update of fixed variable " + m.var_name(u.target));
      if (!m.can_write(r.owner, u.target)) throw ModelError(where + ": write outside owner " + m.var_name(u.target));
      check_expr(m, u.value, true, true, r.owner, where);
    }
  }
}

// ---------------------------------------------------------------------------

bool eval_expr(const TemplateModel& m, const Expr& e, State s, const Instantiation& inst,
               std::optional<std::uint32_t> owner) {
  switch (e.kind()) {
    case ExprKind::Const:
      return e.const_value();
    case ExprKind::Var:
      return s.get(e.var_id());
    case ExprKind::Local:
      if (!owner) throw ModelError("owner-relative reference evaluated without an owner");
      return s.get(m.resolve_local(e.family(), e.neighbor(), *owner));
    case ExprKind::Not:
      return !eval_expr(m, e.children()[0], s, inst, owner);
    case ExprKind::And:
      return eval_expr(m, e.children()[0], s, inst, owner) && eval_expr(m, e.children()[1], s, inst, owner);
    case ExprKind::Or:
      return eval_expr(m, e.children()[0], s, inst, owner) || eval_expr(m, e.children()[1], s, inst, owner);
    case ExprKind::Eq:
      return eval_expr(m, e.children()[0], s, inst, owner) == eval_expr(m, e.children()[1], s, inst, owner);
    case ExprKind::Choice: {
      const auto p = e.param().index;
      if (p >= inst.choice.size()) {
        const auto name = p < m.params.size() ? m.params[p].name : std::to_string(p);
        throw UnboundChoice("choice " + name + " is not bound");
      }
      const auto& domain = m.params.at(p).domain;
      const auto k = inst.choice[p];
      if (k >= domain.size()) throw UnboundChoice("choice " + m.params[p].name + " selects a missing entry");
      return eval_expr(m, domain[k], s, inst, owner);
    }
  }
  return false;
}

State apply_rule(const TemplateModel& m, const Rule& r, State s, const Instantiation& inst) {
  State next = s;
  for (const auto& u : r.updates) next = next.with(u.target, eval_expr(m, u.value, s, inst, r.owner));
  return next;
}

bool rule_enabled(const TemplateModel& m, const Rule& r, State s, const Instantiation& inst) {
  if (!eval_expr(m, r.guard, s, inst, r.owner)) return false;
  for (const auto& u : r.updates) {
    if (m.is_history(u.target)) continue;
    if (eval_expr(m, u.value, s, inst, r.owner) != s.get(u.target)) return true;
  }
  return false;
}

std::size_t enabled_count(const TemplateModel& m, State s, const Instantiation& inst) {
  std::size_t n = 0;
  for (const auto& r : m.rules) n += rule_enabled(m, r, s, inst) ? 1 : 0;
  return n;
}

std::vector<State> successors(const TemplateModel& m, const Instantiation& inst, State s) {
  std::vector<State> out;
  for (const auto& r : m.rules) {
    if (rule_enabled(m, r, s, inst)) out.push_back(apply_rule(m, r, s, inst));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool legitimate(const TemplateModel& m, const Instantiation& inst, State s) { return enabled_count(m, s, inst) == 1; }

// ---------------------------------------------------------------------------

namespace {

Expr substitute(const TemplateModel& m, const Expr& e, const Instantiation& inst) {
  if (!e.contains_choice()) return e;
  switch (e.kind()) {
    case ExprKind::Choice:
      return m.params[e.param().index].domain[inst.choice[e.param().index]];
    case ExprKind::Not:
      return Expr::negation(substitute(m, e.children()[0], inst));
    case ExprKind::And:
      return Expr::conjunction(substitute(m, e.children()[0], inst), substitute(m, e.children()[1], inst));
    case ExprKind::Or:
      return Expr::disjunction(substitute(m, e.children()[0], inst), substitute(m, e.children()[1], inst));
    case ExprKind::Eq:
      return Expr::equality(substitute(m, e.children()[0], inst), substitute(m, e.children()[1], inst));
    default:
      return e;
  }
}

}  // namespace

TemplateModel instantiate(const TemplateModel& m, const Instantiation& inst) {
  if (inst.choice.size() != m.params.size()) {
    throw PartialInstantiation("instantiation binds " + std::to_string(inst.choice.size()) + " of " +
                               std::to_string(m.params.size()) + " parameters");
  }
  for (std::size_t p = 0; p < m.params.size(); ++p) {
    if (inst.choice[p] >= m.params[p].domain.size()) {
      throw PartialInstantiation("choice for " + m.params[p].name + " is out of range");
    }
  }
  TemplateModel out = m;
  out.params.clear();
  for (auto& r : out.rules) {
    r.guard = substitute(m, r.guard, inst);
    for (auto& u : r.updates) u.value = substitute(m, u.value, inst);
  }
  return out;
}

Expr resolve_locals(const TemplateModel& m, const Expr& e, std::uint32_t owner) {
  switch (e.kind()) {
    case ExprKind::Local:
      return Expr::var(m.resolve_local(e.family(), e.neighbor(), owner));
    case ExprKind::Not:
      return Expr::negation(resolve_locals(m, e.children()[0], owner));
    case ExprKind::And:
      return Expr::conjunction(resolve_locals(m, e.children()[0], owner), resolve_locals(m, e.children()[1], owner));
    case ExprKind::Or:
      return Expr::disjunction(resolve_locals(m, e.children()[0], owner), resolve_locals(m, e.children()[1], owner));
    case ExprKind::Eq:
      return Expr::equality(resolve_locals(m, e.children()[0], owner), resolve_locals(m, e.children()[1], owner));
    default:
      return e;
  }
}

AugmentedModel augment_moved(const TemplateModel& m) {
  AugmentedModel out{m, Expr::constant(true)};
  std::string name = "moved";
  while (out.model.find_family(name) || out.model.find_param(name)) name += "_";
  const VarId base = add_family(out.model, name, true, true);
  Expr all;
  for (std::uint32_t i = 0; i < m.machines; ++i) {
    const VarId bit{base.index + i};
    out.model.init = Expr::conjunction(out.model.init, Expr::negation(Expr::var(bit)));
    all = i == 0 ? Expr::var(bit) : Expr::conjunction(all, Expr::var(bit));
  }
  for (auto& r : out.model.rules) r.updates.push_back(Update{VarId{base.index + r.owner}, Expr::constant(true)});
  out.all_moved = all;
  return out;
}

// ---------------------------------------------------------------------------

std::optional<std::uint64_t> instantiation_count(const TemplateModel& m) {
  std::uint64_t total = 1;
  for (const auto& p : m.params) {
    const std::uint64_t d = p.domain.size();
    if (total > std::numeric_limits<std::uint64_t>::max() / d) return std::nullopt;
    total *= d;
  }
  return total;
}

Instantiation instantiation_at(const TemplateModel& m, std::uint64_t rank) {
  Instantiation inst;
  inst.choice.resize(m.params.size());
  for (std::size_t i = m.params.size(); i-- > 0;) {
    const std::uint64_t d = m.params[i].domain.size();
    inst.choice[i] = static_cast<std::uint32_t>(rank % d);
    rank /= d;
  }
  if (rank != 0) throw std::out_of_range("instantiation rank out of range");
  return inst;
}

InstantiationRange::InstantiationRange(const TemplateModel& m) {
  for (const auto& p : m.params) begin_.sizes_.push_back(static_cast<std::uint32_t>(p.domain.size()));
  begin_.current_.choice.assign(m.params.size(), 0);
  begin_.done_ = false;
}

InstantiationRange::iterator& InstantiationRange::iterator::operator++() {
  for (std::size_t i = sizes_.size(); i-- > 0;) {
    if (++current_.choice[i] < sizes_[i]) return *this;
    current_.choice[i] = 0;
  }
  done_ = true;
  return *this;
}

InstantiationRange enumerate_instantiations(const TemplateModel& m) { return InstantiationRange(m); }

}  // namespace bms
