#include <doctest.h>

#include "bms/dsl.hpp"
#include "bms/encode.hpp"
#include "bms/ringlab.hpp"
#include "bms/verify.hpp"

using namespace bms;

namespace {

std::size_t holes(const Expr& e) {
  if (e.kind() == ExprKind::Choice) return 1;
  std::size_t n = 0;
  for (const auto& c : e.children()) n += holes(c);
  return n;
}

std::size_t holes(const TemplateModel& m) {
  std::size_t n = 0;
  for (const auto& r : m.rules) {
    n += holes(r.guard);
    for (const auto& u : r.updates) n += holes(u.value);
  }
  return n;
}

}  // namespace

TEST_CASE("template names round-trip") {
  for (const auto t : kAllTemplates) CHECK(template_from_string(to_string(t)) == t);
  for (const auto s : kAllKnownSolutions) CHECK(known_solution_from_string(to_string(s)) == s);
  CHECK_FALSE(template_from_string("nope"));
}

TEST_CASE("template sizes") {
  struct Row {
    TemplateName name;
    std::size_t params;
    std::size_t bits;
  };
  const Row rows[] = {
      {TemplateName::single_rule, 4, 14},
      {TemplateName::single_rule_BR, 3, 10},
      {TemplateName::single_rule_B_blocks_initialized, 3, 10},
      {TemplateName::two_rules_general, 32, 112},
      {TemplateName::two_rules_reduced, 24, 84},
      {TemplateName::two_rules_reduced_BR, 19, 66},
      {TemplateName::two_rules_reduced_BR_simpl_values, 17, 43},
  };
  for (const auto& row : rows) {
    CAPTURE(to_string(row.name));
    const auto m = build_template(row.name);
    validate(m);
    CHECK(m.machines == 4);
    CHECK(m.params.size() == row.params);
    CHECK(unroll(m, PropertyMode::at(1)).map.param_bit_count() == row.bits);
  }
  CHECK(instantiation_count(build_template(TemplateName::single_rule)) == 9216);
  CHECK(instantiation_count(build_template(TemplateName::single_rule_BR)) == 576);
  CHECK(instantiation_count(build_template(TemplateName::two_rules_reduced_BR_simpl_values)) == 660451885056ULL);
  CHECK(holes(build_template(TemplateName::two_rules_general)) == 32);
}

TEST_CASE("simplified template domains") {
  const auto m = build_template(TemplateName::two_rules_reduced_BR_simpl_values);
  for (const auto& p : m.params) {
    const auto n = p.domain.size();
    CAPTURE(p.name);
    CHECK((n == 6 || n == 4));
  }
  CHECK(m.fixed[m.find_var("B[0]")->index] == false);
  CHECK(m.fixed[m.find_var("B[3]")->index] == true);
}

TEST_CASE("initialized template pins one initial state") {
  const auto m = build_template(TemplateName::single_rule_B_blocks_initialized);
  std::size_t initial = 0;
  for (const auto s : all_states(m)) initial += eval_expr(m, m.init, s, {});
  CHECK(initial == 1);
  auto plain = build_template(TemplateName::single_rule_BR);
  plain.name = m.name;
  plain.init = m.init;
  CHECK(plain == m);
}

TEST_CASE("known solutions") {
  const auto s2 = known_solution(KnownSolutionName::section2_solution);
  CHECK(s2.template_name == TemplateName::two_rules_reduced_BR_simpl_values);
  CHECK(verify_all(s2.model).all_pass());
  for (const auto& reading : known_solution_readings(KnownSolutionName::section2_solution)) {
    if (!reading.inst) continue;
    CAPTURE(reading.label);
    // The template instance has the same enabledness and moves.
    const auto tmpl = build_template(home_template(KnownSolutionName::section2_solution));
    const auto concrete = parse_model(reading.dsl);
    for (const auto s : all_states(concrete)) {
      CHECK(successors(concrete, {}, s) == successors(tmpl, *reading.inst, s));
      CHECK(legitimate(concrete, {}, s) == legitimate(tmpl, *reading.inst, s));
    }
  }

  const auto init = known_solution(KnownSolutionName::initialized_solution);
  CHECK(init.template_name == TemplateName::single_rule_B_blocks_initialized);
  REQUIRE(init.inst);
  const auto tmpl = build_template(init.template_name);
  for (const auto s : all_states(init.model)) CHECK(successors(init.model, {}, s) == successors(tmpl, *init.inst, s));

  // No reading of the printed first solution is eventually always legitimate.
  CHECK_THROWS_AS(known_solution(KnownSolutionName::section42_first_solution), AmbiguityUnresolved);
  for (const auto& reading : known_solution_readings(KnownSolutionName::section42_first_solution)) {
    CAPTURE(reading.label);
    CHECK(check_fair(parse_model(reading.dsl)).has_value());
  }
}
