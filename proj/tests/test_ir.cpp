#include <doctest.h>

#include <set>

#include "bms/dsl.hpp"
#include "bms/ringlab.hpp"
#include "bms/verify.hpp"

using namespace bms;

namespace {

// One machine, families A and B, one rule owned by machine 0.
TemplateModel tiny(const std::string& rule) {
  return parse_model("system t {\n  machines 1;\n  var A[1] : bool;\n  var B[1] : bool;\n  init true;\n  " + rule + "\n}\n");
}

State st(const TemplateModel& m, bool a, bool b) {
  return State().with(*m.find_var("A[0]"), a).with(*m.find_var("B[0]"), b);
}

TemplateModel reference() { return known_solution(KnownSolutionName::section2_solution).model; }

}  // namespace

TEST_CASE("expression evaluation") {
  const auto m = tiny("rule r owner 0 : A => A := !A;");
  const auto a = Expr::var(*m.find_var("A[0]"));
  for (const bool v : {false, true}) CHECK_FALSE(eval_expr(m, Expr::equality(a, !a), st(m, v, false), {}));

  const auto s2 = reference();
  const auto& r3 = s2.rules.back();
  REQUIRE(r3.owner == 3);
  // A[3] = 0, A_L = A[2] = 1.
  const State s = State().with(*s2.find_var("A[2]"), true).with(*s2.find_var("B[3]"), true);
  CHECK(eval_expr(s2, r3.guard, s, {}, 3));

  const auto tmpl = build_template(TemplateName::single_rule);
  const auto c_a = *tmpl.find_param("c_A");
  const auto& domain = tmpl.params[c_a.index].domain;
  const auto target = Expr::equality(Expr::local(0, Neighbor::Self), Expr::local(1, Neighbor::Right));
  const auto k = std::find(domain.begin(), domain.end(), target) - domain.begin();
  REQUIRE(k < static_cast<long>(domain.size()));
  Instantiation inst{{static_cast<std::uint32_t>(k), 0, 0, 0}};
  const State on = State().with(*tmpl.find_var("A[0]"), true).with(*tmpl.find_var("B[1]"), true);
  CHECK(eval_expr(tmpl, Expr::choice(c_a), on, inst, 0));
  CHECK_THROWS_AS(eval_expr(tmpl, Expr::choice(c_a), on, {}, 0), UnboundChoice);
}

TEST_CASE("rule application is simultaneous") {
  const auto flip = tiny("rule r owner 0 : true => A := !A;");
  CHECK(apply_rule(flip, flip.rules[0], st(flip, false, true), {}) == st(flip, true, true));

  const auto swap = tiny("rule r owner 0 : true => A := B, B := A;");
  CHECK(apply_rule(swap, swap.rules[0], st(swap, false, true), {}) == st(swap, true, false));
}

TEST_CASE("enabledness needs a guard and a change") {
  const auto never = tiny("rule r owner 0 : false => A := !A;");
  CHECK_FALSE(rule_enabled(never, never.rules[0], st(never, false, false), {}));

  const auto idle = tiny("rule r owner 0 : true => A := A, B := B;");
  for (const bool a : {false, true}) CHECK_FALSE(rule_enabled(idle, idle.rules[0], st(idle, a, !a), {}));

  const auto init = known_solution(KnownSolutionName::initialized_solution).model;
  // Machine 0 reads B_R = B[1] = 0.
  CHECK_FALSE(rule_enabled(init, init.rules[0], State().with(*init.find_var("A[0]"), true), {}));

  // The same rule with A = B = B_R = 1 is a fixpoint.
  State ones;
  for (std::uint32_t v = 0; v < init.var_count(); ++v) ones = ones.with(VarId{v}, true);
  CHECK(apply_rule(init, init.rules[0], ones, {}) == ones);
  CHECK_FALSE(rule_enabled(init, init.rules[0], ones, {}));
}

TEST_CASE("successors and legitimacy on the reference protocol") {
  const auto m = reference();
  const auto states = all_states(m);
  CHECK(states.size() == 64);
  bool saw_two = false, saw_one = false;
  for (const auto s : states) {
    std::set<State> direct;
    std::size_t enabled = 0;
    for (const auto& r : m.rules) {
      if (rule_enabled(m, r, s, {})) {
        ++enabled;
        direct.insert(apply_rule(m, r, s, {}));
      }
    }
    const auto succ = successors(m, {}, s);
    CHECK(std::vector<State>(direct.begin(), direct.end()) == succ);
    CHECK(enabled_count(m, s, {}) == enabled);
    CHECK(legitimate(m, {}, s) == (enabled == 1));
    if (enabled == 2 && succ.size() == 2) saw_two = true;
    if (enabled == 1) saw_one = true;
  }
  CHECK(saw_two);
  CHECK(saw_one);
}

TEST_CASE("deadlocked state has no successors and is not legitimate") {
  const auto m = tiny("rule r owner 0 : A & !A => A := !A;");
  CHECK(successors(m, {}, st(m, false, false)).empty());
  CHECK_FALSE(legitimate(m, {}, st(m, false, false)));
}

TEST_CASE("instantiate substitutes every hole") {
  const auto plain = tiny("rule r owner 0 : A => B := !B;");
  CHECK(instantiate(plain, {}) == plain);

  const auto tmpl = build_template(TemplateName::single_rule);
  for (std::uint64_t rank : {0ULL, 17ULL, 4321ULL, 9215ULL}) {
    const auto concrete = instantiate(tmpl, instantiation_at(tmpl, rank));
    CHECK(concrete.params.empty());
    for (const auto& r : concrete.rules) {
      CHECK_FALSE(r.guard.contains_choice());
      for (const auto& u : r.updates) CHECK_FALSE(u.value.contains_choice());
    }
  }

  auto index_of = [&](const char* param, const Expr& e) {
    const auto& d = tmpl.params[tmpl.find_param(param)->index].domain;
    return static_cast<std::uint32_t>(std::find(d.begin(), d.end(), e) - d.begin());
  };
  const auto A = Expr::local(0, Neighbor::Self);
  const auto B = Expr::local(1, Neighbor::Self);
  const Instantiation inst{{index_of("c_A", Expr::equality(A, Expr::local(0, Neighbor::Right))),
                            index_of("c_B", Expr::equality(B, Expr::local(1, Neighbor::Right))), index_of("v_A", !A),
                            index_of("v_B", B)}};
  const auto listing = render_rule_listing(instantiate(tmpl, inst));
  CHECK(listing.find("R_0: IF A == A_R & B == B_R THEN A := !A, B := B ENDIF") != std::string::npos);
}

TEST_CASE("history augmentation") {
  const auto m = build_template(TemplateName::single_rule);
  const auto aug = augment_moved(m);
  CHECK(aug.model.var_count() == m.var_count() + 4);
  // Initially no machine has moved.
  for (const auto s : {State(0), State(0xff)}) {
    State with_moved = s;
    for (std::uint32_t i = 0; i < 4; ++i) with_moved = with_moved.with(VarId{8 + i}, true);
    CHECK(eval_expr(aug.model, aug.model.init, s, Instantiation{{0, 0, 0, 0}}) == eval_expr(m, m.init, s, Instantiation{{0, 0, 0, 0}}));
    CHECK_FALSE(eval_expr(aug.model, aug.model.init, with_moved, Instantiation{{0, 0, 0, 0}}));
  }

  // Only machine 0 ever fires: M stays false.
  const auto s2 = augment_moved(reference());
  State s;
  const auto& r0 = s2.model.rules[0];
  REQUIRE(r0.owner == 0);
  for (int i = 0; i < 4; ++i) s = apply_rule(s2.model, r0, s, {});
  CHECK_FALSE(eval_expr(s2.model, s2.all_moved, s, {}));

  // Some reachable augmented state is legitimate with every machine moved.
  const auto g = build_state_graph(s2.model);
  CHECK(g.nodes.size() <= 1024);
  bool found = false;
  for (const auto node : g.nodes) {
    found = found || (legitimate(s2.model, {}, node) && eval_expr(s2.model, s2.all_moved, node, {}));
  }
  CHECK(found);
}

TEST_CASE("instantiation enumeration") {
  const auto plain = tiny("rule r owner 0 : A => B := !B;");
  CHECK(instantiation_count(plain) == 1U);
  std::size_t n = 0;
  for (const auto& inst : enumerate_instantiations(plain)) {
    CHECK(inst.choice.empty());
    ++n;
  }
  CHECK(n == 1);

  CHECK(instantiation_count(build_template(TemplateName::single_rule)) == 9216U);

  const auto two = parse_model(R"(system t {
  machines 1;
  var A[1] : bool;
  param p = { A, !A };
  param q = { true, false, A };
  init true;
  rule r owner 0 : ?p => A := ?q;
})");
  std::vector<std::vector<std::uint32_t>> seen;
  for (const auto& inst : enumerate_instantiations(two)) seen.push_back(inst.choice);
  const std::vector<std::vector<std::uint32_t>> expected{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}};
  CHECK(seen == expected);
  for (std::uint64_t k = 0; k < 6; ++k) CHECK(instantiation_at(two, k).choice == expected[k]);
}

TEST_CASE("validation rejects malformed models") {
  auto m = tiny("rule r owner 0 : A => A := !A;");
  auto bad_owner = m;
  bad_owner.rules[0].owner = 3;
  CHECK_THROWS_AS(validate(bad_owner), ModelError);
  auto fixed_target = m;
  fixed_target.fixed[0] = true;
  CHECK_THROWS_AS(validate(fixed_target), ModelError);
  auto duplicate = m;
  duplicate.rules[0].updates.push_back(duplicate.rules[0].updates[0]);
  CHECK_THROWS_AS(validate(duplicate), ModelError);
}
