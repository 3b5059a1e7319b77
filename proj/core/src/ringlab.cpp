#include "bms/ringlab.hpp"

#include <map>

#include "bms/dsl.hpp"
#include "bms/encode.hpp"
#include "bms/verify.hpp"

namespace bms {

namespace {

constexpr std::uint32_t kMachines = 4;

struct Ring {
  TemplateModel m;
  std::uint32_t a = 0;  // family ids
  std::uint32_t b = 0;

  explicit Ring(std::string_view name) {
    m.name = std::string(name);
    m.machines = kMachines;
    m.ring = true;
    add_family(m, "A", true);
    add_family(m, "B", true);
    a = *m.find_family("A");
    b = *m.find_family("B");
  }

  Expr A(Neighbor w = Neighbor::Self) const { return Expr::local(a, w); }
  Expr B(Neighbor w = Neighbor::Self) const { return Expr::local(b, w); }
  VarId var_b(std::uint32_t i) const { return VarId{m.family_base(b).index + i}; }
  VarId var_a(std::uint32_t i) const { return VarId{m.family_base(a).index + i}; }

  std::vector<Expr> full_domain() const {
    return {A(), B(), A(Neighbor::Left), A(Neighbor::Right), B(Neighbor::Left), B(Neighbor::Right),
            Expr::constant(false), Expr::constant(true)};
  }
  std::vector<Expr> small_domain() const { return {B(), A(Neighbor::Left), A(Neighbor::Right)}; }

  // (x = d) for every d, then (x = !d) for every d.
  static std::vector<Expr> conditions(const Expr& x, const std::vector<Expr>& d) {
    std::vector<Expr> out;
    for (const auto& e : d) out.push_back(Expr::equality(x, e));
    for (const auto& e : d) out.push_back(Expr::equality(x, Expr::negation(e)));
    return out;
  }
  std::vector<Expr> values() const { return {A(), !A(), B(), !B(), Expr::constant(true), Expr::constant(false)}; }
  std::vector<Expr> small_values() const { return {A(), !A(), Expr::constant(true), Expr::constant(false)}; }

  Expr param(std::string name, std::vector<Expr> domain) {
    m.params.push_back(ChoiceParam{std::move(name), std::move(domain)});
    return Expr::choice(ParamId{static_cast<std::uint32_t>(m.params.size() - 1)});
  }

  void rule(std::string name, std::uint32_t owner, Expr guard, std::optional<Expr> va, std::optional<Expr> vb) {
    Rule r{std::move(name), owner, std::move(guard), {}, std::nullopt};
    if (va) r.updates.push_back(Update{var_a(owner), *va});
    if (vb) r.updates.push_back(Update{var_b(owner), *vb});
    m.rules.push_back(std::move(r));
  }
};

TemplateModel single_rule_family(TemplateName t) {
  Ring r(to_string(t));
  const auto dom = r.full_domain();
  const Expr c_a = r.param("c_A", Ring::conditions(r.A(), dom));
  Expr guard;
  if (t == TemplateName::single_rule) {
    guard = c_a && r.param("c_B", Ring::conditions(r.B(), dom));
  } else {
    guard = c_a && r.B(Neighbor::Right);
  }
  const Expr v_a = r.param("v_A", r.values());
  const Expr v_b = r.param("v_B", r.values());
  if (t == TemplateName::single_rule_B_blocks_initialized) {
    Expr init = Expr::var(r.var_b(0));
    for (std::uint32_t i = 0; i < kMachines; ++i) init = init && !Expr::var(r.var_a(i));
    for (std::uint32_t i = 1; i < kMachines; ++i) init = init && !Expr::var(r.var_b(i));
    r.m.init = init;
  }
  r.rule("R", 0, guard, v_a, v_b);
  for (std::uint32_t i = 1; i < kMachines; ++i) share_rules(r.m, 0, i);
  return r.m;
}

TemplateModel two_rules_family(TemplateName t) {
  Ring r(to_string(t));
  const bool blocking = t == TemplateName::two_rules_reduced_BR || t == TemplateName::two_rules_reduced_BR_simpl_values;
  const bool simple = t == TemplateName::two_rules_reduced_BR_simpl_values;
  const bool reduced = t != TemplateName::two_rules_general;
  if (blocking) r.m.fixed[r.var_b(0).index] = false;
  if (simple) r.m.fixed[r.var_b(kMachines - 1).index] = true;
  const auto dom = simple ? r.small_domain() : r.full_domain();
  const auto vals = simple ? r.small_values() : r.values();

  for (std::uint32_t i = 0; i < kMachines; ++i) {
    if (reduced && i == 2) {
      share_rules(r.m, 1, 2);
      continue;
    }
    const bool b_fixed = r.m.fixed[r.var_b(i).index].has_value();
    for (std::uint32_t j = 1; j <= 2; ++j) {
      const auto tag = "_" + std::to_string(i) + "_" + std::to_string(j);
      const Expr c_a = r.param("c_A" + tag, Ring::conditions(r.A(), dom));
      const Expr guard =
          blocking && j == 1 ? c_a && r.B(Neighbor::Right) : c_a && r.param("c_B" + tag, Ring::conditions(r.B(), dom));
      const Expr v_a = r.param("v_A" + tag, vals);
      std::optional<Expr> v_b;
      if (!b_fixed) v_b = r.param("v_B" + tag, vals);
      r.rule("R" + tag, i, guard, v_a, v_b);
    }
  }
  return r.m;
}

// Index of `value` in the domain of param `name`.
void bind(const TemplateModel& m, Instantiation& inst, const std::string& name, const Expr& value) {
  const auto p = m.find_param(name);
  if (!p) throw std::logic_error("ringlab: no param " + name);
  const auto& domain = m.params[p->index].domain;
  for (std::uint32_t k = 0; k < domain.size(); ++k) {
    if (domain[k] == value) {
      inst.choice[p->index] = k;
      return;
    }
  }
  throw std::logic_error("ringlab: value not in the domain of " + name);
}

struct Reading {
  std::string label;
  std::string dsl;
  std::optional<std::map<std::string, Expr>> binding;
};

constexpr std::string_view kHeader = R"(
  machines 4;
  topology ring;
  var A[4] : bool;
  var B[4] : bool;
)";

std::string with_header(std::string_view name, std::string_view body) {
  return "system " + std::string(name) + " {" + std::string(kHeader) + std::string(body) + "}\n";
}

}  // namespace

std::string_view to_string(TemplateName t) {
  switch (t) {
    case TemplateName::single_rule:
      return "single_rule";
    case TemplateName::single_rule_BR:
      return "single_rule_BR";
    case TemplateName::single_rule_B_blocks_initialized:
      return "single_rule_B_blocks_initialized";
    case TemplateName::two_rules_general:
      return "two_rules_general";
    case TemplateName::two_rules_reduced:
      return "two_rules_reduced";
    case TemplateName::two_rules_reduced_BR:
      return "two_rules_reduced_BR";
    case TemplateName::two_rules_reduced_BR_simpl_values:
      return "two_rules_reduced_BR_simpl_values";
  }
  return "?";
}

std::optional<TemplateName> template_from_string(std::string_view name) {
  for (const auto t : kAllTemplates) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

TemplateModel build_template(TemplateName t) {
  switch (t) {
    case TemplateName::single_rule:
    case TemplateName::single_rule_BR:
    case TemplateName::single_rule_B_blocks_initialized:
      return single_rule_family(t);
    default:
      return two_rules_family(t);
  }
}

std::string_view to_string(KnownSolutionName s) {
  switch (s) {
    case KnownSolutionName::section2_solution:
      return "section2_solution";
    case KnownSolutionName::initialized_solution:
      return "initialized_solution";
    case KnownSolutionName::section42_first_solution:
      return "section42_first_solution";
  }
  return "?";
}

std::optional<KnownSolutionName> known_solution_from_string(std::string_view name) {
  for (const auto s : kAllKnownSolutions) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

TemplateName home_template(KnownSolutionName name) {
  return name == KnownSolutionName::initialized_solution ? TemplateName::single_rule_B_blocks_initialized
                                                         : TemplateName::two_rules_reduced_BR_simpl_values;
}

std::vector<SolutionReading> known_solution_readings(KnownSolutionName name) {
  Ring r("");
  const auto A = r.A();
  const auto B = r.B();
  const auto AL = r.A(Neighbor::Left);
  const auto AR = r.A(Neighbor::Right);
  const auto tru = Expr::constant(true);
  const auto fls = Expr::constant(false);
  auto eq = Expr::equality;

  const TemplateName home = home_template(name);
  std::vector<Reading> readings;
  switch (name) {
    case KnownSolutionName::section2_solution: {
      // "B_1 fixed false, B_4 fixed true": machines counted from 1, or from 0
      // with B_4 wrapping around the ring.
      const std::string rules = R"(
  rule R_0 owner 0 : A == A_R & B_R => A := !A;
  rule R_1_1 owner 1 : A != A_L => A := !A, B := false;
  rule R_1_2 owner 1 : A == A_R & B_R => B := true;
  share 2 rules of 1;
  rule R_3 owner 3 : A != A_L => A := !A;
)";
      std::map<std::string, Expr> bind{
          {"c_A_0_1", eq(A, AR)},  {"v_A_0_1", !A},          {"c_A_0_2", eq(A, B)},   {"c_B_0_2", eq(B, !B)},
          {"v_A_0_2", A},          {"c_A_1_1", eq(A, AR)},   {"v_A_1_1", A},          {"v_B_1_1", tru},
          {"c_A_1_2", eq(A, !AL)}, {"c_B_1_2", eq(B, B)},    {"v_A_1_2", !A},         {"v_B_1_2", fls},
          {"c_A_3_1", eq(A, B)},   {"v_A_3_1", A},           {"c_A_3_2", eq(A, !AL)}, {"c_B_3_2", eq(B, B)},
          {"v_A_3_2", !A},
      };
      readings.push_back({"machines numbered from 1 (B[0] = false, B[3] = true)",
                          with_header(to_string(name), "  fix B[0] = false;\n  fix B[3] = true;" + rules), bind});
      readings.push_back({"machines numbered from 0 (B[1] = false, B[0] = true)",
                          with_header(to_string(name), "  fix B[1] = false;\n  fix B[0] = true;" + rules), std::nullopt});
      break;
    }
    case KnownSolutionName::initialized_solution: {
      // A := B_R under guard B_R is A := true, which the template's value domain has.
      readings.push_back({"as printed",
                          with_header(to_string(name), R"(
  init B[0] & !A[0] & !A[1] & !A[2] & !A[3] & !B[1] & !B[2] & !B[3];
  rule R owner 0 : B_R => A := B_R, B := A;
  share 1 rules of 0;
  share 2 rules of 0;
  share 3 rules of 0;
)"),
                          std::map<std::string, Expr>{{"c_A", eq(A, A)}, {"v_A", tru}, {"v_B", A}}});
      break;
    }
    case KnownSolutionName::section42_first_solution: {
      // Open points: the neighbor written A_r, and whether R_0's two rules
      // (same move, one guard implying the other) count once or twice.
      for (const auto* side : {"A_R", "A_L"}) {
        for (const bool distinct : {true, false}) {
          std::string body = "  fix B[0] = false;\n  fix B[3] = true;\n";
          if (distinct) body += "  rule R_0_1 owner 0 : A == B & B_R => A := !A;\n";
          body += "  rule R_0_2 owner 0 : A == B => A := !A;\n";
          body += "  rule R_1 owner 1 : A != " + std::string(side) + " & B_R => A := !A, B := false;\n";
          body += "  share 2 rules of 1;\n";
          body += "  rule R_3 owner 3 : A != A_L & B == A_R => A := !A;\n";
          std::optional<std::map<std::string, Expr>> bind;
          if (distinct) {
            const auto nb = std::string(side) == "A_R" ? AR : AL;
            bind = std::map<std::string, Expr>{
                {"c_A_0_1", eq(A, B)},  {"v_A_0_1", !A}, {"c_A_0_2", eq(A, B)}, {"c_B_0_2", eq(B, B)},   {"v_A_0_2", !A},
                {"c_A_1_1", eq(A, !nb)}, {"v_A_1_1", !A}, {"v_B_1_1", fls},      {"c_A_1_2", eq(A, B)},   {"c_B_1_2", eq(B, !B)},
                {"v_A_1_2", A},          {"v_B_1_2", fls},
                {"c_A_3_1", eq(A, B)},   {"v_A_3_1", A}, {"c_A_3_2", eq(A, !AL)}, {"c_B_3_2", eq(B, AR)}, {"v_A_3_2", !A},
            };
          }
          readings.push_back({"A_r read as " + std::string(side) + (distinct ? ", rules of R_0 counted separately"
                                                                             : ", identical moves of R_0 counted once"),
                              with_header(to_string(name), body), bind});
        }
      }
      break;
    }
  }

  const auto tmpl = build_template(home);
  std::vector<SolutionReading> out;
  for (const auto& reading : readings) {
    std::optional<Instantiation> inst;
    if (reading.binding) {
      inst = Instantiation{std::vector<std::uint32_t>(tmpl.params.size(), 0)};
      for (const auto& [param, value] : *reading.binding) bind(tmpl, *inst, param, value);
    }
    out.push_back({reading.label, reading.dsl, inst});
  }
  return out;
}

KnownSolution known_solution(KnownSolutionName name) {
  const auto readings = known_solution_readings(name);
  KnownSolution out;
  out.template_name = home_template(name);
  for (const auto& reading : readings) {
    TemplateModel model;
    try {
      model = parse_model(reading.dsl);
    } catch (const ParseError& e) {
      out.rejected.push_back(reading.label + ": " + e.what());
      continue;
    }
    // A single reading is taken as printed; the property check only arbitrates.
    if (readings.size() > 1 && check_afg(model, {}, Predicate::legitimate())) {
      out.rejected.push_back(reading.label + ": FG(legitimate) fails");
      continue;
    }
    out.model = std::move(model);
    out.reading = reading.label;
    out.inst = reading.inst;
    return out;
  }
  std::string msg = "no reading of " + std::string(to_string(name)) + " satisfies FG(legitimate):";
  for (const auto& r : out.rejected) msg += "\n  " + r;
  throw AmbiguityUnresolved(msg);
}

}  // namespace bms
