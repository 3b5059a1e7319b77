// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "bms/dsl.hpp"
#include "bms/encode.hpp"
#include "bms/ringlab.hpp"
#include "bms/sat.hpp"
#include "bms/synth.hpp"
#include "bms/verify.hpp"
#include "support.hpp"

using namespace bms;

namespace {

using Clock = std::chrono::steady_clock;

/// Collects the facts behind one verdict.
struct Log {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) ok = false;
    detail << "    " << (cond ? "ok   " : "FAIL ") << what << '\n';
  }
  void note(const std::string& what) { detail << "    info " << what << '\n'; }
};

std::string secs(Clock::time_point since) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", std::chrono::duration<double>(Clock::now() - since).count());
  return buf;
}

std::string outcome(const SynthOutcome& o) {
  std::ostringstream s;
  s << to_string(o.kind) << " after " << o.stats.iterations << " iterations, " << static_cast<long>(o.stats.wall_ms) << " ms";
  return s.str();
}

CegisOptions budgeted(double seconds) {
  CegisOptions o;
  o.budget.wall_seconds = seconds;
  return o;
}

/// Concrete models of every reading of every printed protocol that forms a
/// valid model.
std::vector<TemplateModel> reading_models(Log& log) {
  std::vector<TemplateModel> out;
  for (const auto name : kAllKnownSolutions) {
    for (const auto& reading : known_solution_readings(name)) {
      try {
        out.push_back(parse_model(reading.dsl));
      } catch (const ParseError& e) {
        log.note(std::string(to_string(name)) + " reading '" + reading.label + "' is not a valid model: " + e.what());
      }
    }
  }
  return out;
}

// 1. Single-rule infeasibility.
void single_rule(Log& log) {
  const auto m = build_template(TemplateName::single_rule);
  for (const std::uint32_t c : {4U, 8U}) {
    BruteForceOptions opts;
    opts.budget.wall_seconds = 240;
    const auto b = brute_force(m, PropertyMode::at(c), std::nullopt, opts);
    log.expect(b.kind == SynthKind::NoSolution && b.stats.iterations == 9216,
               "brute_force X^" + std::to_string(c) + ": " + outcome(b));
  }
  for (const std::uint32_t c : {4U, 8U, 16U}) {
    const auto o = cegis(m, PropertyMode::at(c), std::nullopt, budgeted(120));
    log.expect(o.kind == SynthKind::NoSolution, "cegis X^" + std::to_string(c) + ": " + outcome(o));
  }
}

// 2. single_rule_BR infeasibility.
void single_rule_br(Log& log) {
  const auto m = build_template(TemplateName::single_rule_BR);
  for (const std::uint32_t c : {4U, 16U}) {
    const auto start = Clock::now();
    const auto o = cegis(m, PropertyMode::at(c), std::nullopt, budgeted(120));
    log.expect(o.kind == SynthKind::NoSolution && Clock::now() - start < std::chrono::minutes(2),
               "cegis X^" + std::to_string(c) + ": " + outcome(o));
  }
}

// 3. Initialized template.
void initialized(Log& log) {
  const auto m = build_template(TemplateName::single_rule_B_blocks_initialized);
  const auto o = cegis(m, PropertyMode::at(4), std::nullopt, budgeted(60));
  log.expect(o.kind == SynthKind::Solution, "cegis X^4: " + outcome(o));
  if (o.inst) {
    std::istringstream listing(render_rule_listing(instantiate(m, *o.inst)));
    for (std::string line; std::getline(listing, line);) log.note(line);
  }

  const auto printed = known_solution(KnownSolutionName::initialized_solution);
  log.expect(render_rule_listing(printed.model).find("IF B_R THEN A := B_R, B := A") != std::string::npos,
             "printed rule reads IF B_R THEN A := B_R, B := A");
  log.expect(printed.inst && check_candidate(m, *printed.inst, PropertyMode::at(4)).valid(), "printed instance passes X^4 at depth 4");
  const auto lasso = check_afg(printed.model, {}, Predicate::legitimate());
  log.expect(lasso && lasso->length() <= 16 && lasso_replays(printed.model, {}, *lasso),
             "FG(legitimate) fails with a lasso of length " + std::to_string(lasso ? lasso->length() : 0) + " (<= 16)");
}

// 4. Reference solution.
void reference(Log& log) {
  const auto s = known_solution(KnownSolutionName::section2_solution);
  log.note("reading: " + s.reading);
  const auto g = build_state_graph(s.model);
  log.expect(check_deadlock(g).empty(), "no deadlock among " + std::to_string(g.nodes.size()) + " states");
  log.expect(!check_afg(s.model, {}, Predicate::legitimate()), "FG(legitimate)");
  log.expect(!check_closure(s.model, {}, Predicate::legitimate()), "legitimate states closed");
  log.expect(!check_fair(s.model), "FG(legitimate and moved)");
}

CegisOptions fair_options(bool closure) {
  auto o = budgeted(900);
  o.require_closure = closure;
  return o;
}

const PropertyMode kFair12 = PropertyMode::at(12, Predicate::legitimate_and_moved());
const PropertyMode kFair11 = PropertyMode::at(11, Predicate::legitimate_and_moved());

// 5. Fair synthesis. The legitimate states are required to be closed under
// every move; without that requirement the first X^12 solution found may
// leave the legitimate set, which the full verify suite rejects.
void fair_synthesis(Log& log) {
  const auto m = build_template(TemplateName::two_rules_reduced_BR_simpl_values);
  const auto o = cegis(m, kFair12, std::nullopt, fair_options(true));
  log.expect(o.kind == SynthKind::Solution, "cegis X^12(legitimate and moved), closure required: " + outcome(o));
  if (o.inst) {
    const auto concrete = instantiate(m, *o.inst);
    const auto report = verify_all(concrete, {}, {kFair12});
    log.expect(report.all_pass(), "full verify suite on the solution");
    std::istringstream listing(render_rule_listing(concrete));
    for (std::string line; std::getline(listing, line);) log.note(line);
  }
  const auto plain = cegis(m, kFair12, std::nullopt, fair_options(false));
  std::string verdict;
  if (plain.inst) verdict = verify_all(instantiate(m, *plain.inst), {}, {kFair12}).all_pass() ? ", verify passes" : ", verify fails";
  log.note("without closure: " + outcome(plain) + verdict);
}

// 6. X^11 probe.
void probe11(Log& log) {
  const auto m = build_template(TemplateName::two_rules_reduced_BR_simpl_values);
  const auto o = cegis(m, kFair11, std::nullopt, fair_options(true));
  log.expect(o.kind == SynthKind::NoSolution, "cegis X^11(legitimate and moved), closure required: " + outcome(o));
  const auto plain = cegis(m, kFair11, std::nullopt, fair_options(false));
  log.note("without closure: " + outcome(plain));
}

// 7. SAT oracle agreement.
void sat_oracle(Log& log) {
  testing::Rng rng(0xC7);
  int agree = 0, sat = 0;
  for (int i = 0; i < 500; ++i) {
    const auto n = 3 + testing::pick(rng, 16);
    const auto ratio = 3.0 + std::uniform_real_distribution<double>(0, 2.5)(rng);
    const auto f = testing::random_3cnf(rng, n, static_cast<std::uint32_t>(n * ratio));
    const auto r = solve(f);
    const bool truth = testing::brute_force_sat(f);
    agree += r.is_sat() == truth && (!r.is_sat() || satisfies(f, r.model));
    sat += truth;
  }
  log.expect(agree == 500, std::to_string(agree) + "/500 verdicts agree (" + std::to_string(sat) + " satisfiable)");
}

// 8. AFG oracle agreement.
void afg_oracle(Log& log) {
  testing::Rng rng(0xC8);
  int agree = 0, failing = 0;
  for (int i = 0; i < 200; ++i) {
    const auto rg = testing::random_graph(rng, 10);
    const auto lasso = check_afg(rg.graph, rg.phi);
    const bool truth = testing::oracle_afg_fails(rg.graph, rg.phi);
    agree += lasso.has_value() == truth && (!lasso || testing::lasso_is_witness(rg.graph, rg.phi, *lasso));
    failing += truth;
  }
  log.expect(agree == 200, std::to_string(agree) + "/200 verdicts agree (" + std::to_string(failing) + " with a lasso)");
}

// 9. Encoding soundness by exhaustive enumeration.
void encoding(Log& log) {
  testing::Rng rng(0xC9);
  testing::ModelShape shape;
  shape.min_machines = shape.max_machines = 2;
  shape.total_vars = 2;
  shape.max_rules = 2;
  testing::ModelGen gen(rng, shape);
  int models = 0, agree = 0;
  std::uint64_t pairs = 0, violations = 0;
  while (models < 50) {
    const auto m = gen.make();
    const auto depth = testing::pick(rng, 4);
    const auto from = testing::pick(rng, depth + 1);
    const auto pred = testing::coin(rng, 0.25) ? Predicate::legitimate_and_moved() : Predicate::legitimate();
    const auto u = unroll(m, testing::coin(rng) ? PropertyMode::at(depth, pred) : PropertyMode::hold(from, depth, pred));
    const auto n = u.circuit.input_count();
    if (u.map.param_bit_count() > 3 || n > 20) continue;
    ++models;
    bool ok = true;
    std::vector<std::uint64_t> words(n);
    std::vector<bool> in(n);
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t base = 0; base < total && ok; base += 64) {
      for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t w = 0;
        for (std::uint64_t k = 0; k < 64 && base + k < total; ++k) w |= (((base + k) >> i) & 1U) << k;
        words[i] = w;
      }
      const auto packed = testing::eval64(u.circuit, u.violation, words);
      for (std::uint64_t k = 0; k < 64 && base + k < total; ++k) {
        for (std::size_t i = 0; i < n; ++i) in[i] = ((base + k) >> i) & 1U;
        const bool circuit = (packed >> k) & 1U;
        ++pairs;
        violations += circuit;
        if (circuit != testing::interpreter_violation(u, in)) {
          ok = false;
          break;
        }
      }
    }
    agree += ok;
  }
  log.expect(agree == 50, std::to_string(agree) + "/50 models agree on all " + std::to_string(pairs) + " (y, x) pairs (" +
                              std::to_string(violations) + " violating)");
}

// 10. Explicit bounded check versus BMC.
void cross_layer(Log& log) {
  int agree = 0, total = 0;
  for (const auto& m : reading_models(log)) {
    for (std::uint32_t c = 0; c <= 8; ++c) {
      const auto prop = PropertyMode::at(c);
      const bool explicit_ok = check_bounded(m, {}, prop).verdict == BoundedVerdict::Valid;
      const bool bmc_ok = !solve(to_bmc_cnf(unroll(m, prop))).is_sat();
      agree += explicit_ok == bmc_ok;
      ++total;
    }
  }
  log.expect(agree == total, std::to_string(agree) + "/" + std::to_string(total) + " (reading, c) verdicts agree");
}

// 11. Format contracts.
void formats(Log& log) {
  int exports = 0, lint_ok = 0;
  auto lint = [&](const Unrolling& u) {
    exports += 2;
    lint_ok += testing::lint_dimacs(write_dimacs(to_bmc_cnf(u)), false).ok;
    lint_ok += testing::lint_dimacs(write_qdimacs(to_qbf(u)), true).ok;
  };
  int shipped = 0, shipped_ok = 0;
  for (const auto t : kAllTemplates) {
    const auto path = std::filesystem::path(BMS_MODELS_DIR) / (std::string(to_string(t)) + ".bms");
    const auto m = load_model(path.string());
    ++shipped;
    shipped_ok += m == build_template(t) && parse_model(render_model(m)) == m;
    lint(unroll(m, PropertyMode::at(4)));
  }
  for (const auto& m : reading_models(log)) lint(unroll(m, PropertyMode::at(3)));
  testing::Rng rng(0xCB);
  testing::ModelGen gen(rng, {});
  int random_ok = 0;
  for (int i = 0; i < 500; ++i) {
    const auto m = gen.make();
    random_ok += parse_model(render_model(m)) == m;
    if (i % 10 == 0) lint(unroll(m, PropertyMode::at(testing::pick(rng, 3))));
  }
  log.expect(lint_ok == exports, std::to_string(lint_ok) + "/" + std::to_string(exports) + " DIMACS/QDIMACS exports pass the lint");
  log.expect(shipped_ok == shipped, std::to_string(shipped_ok) + "/" + std::to_string(shipped) + " shipped models round-trip");
  log.expect(random_ok == 500, std::to_string(random_ok) + "/500 random models round-trip");
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(Log&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const Criterion criteria[] = {
      {1, "single_rule has no instantiation (X^4, X^8 brute force; X^4, X^8, X^16 cegis)", single_rule},
      {2, "single_rule_BR has no instantiation (X^4, X^16)", single_rule_br},
      {3, "initialized template solved at X^4, printed rule fails FG", initialized},
      {4, "reference protocol: deadlock-free, FG, closed, fair", reference},
      {5, "simpl_values X^12(legitimate and moved) solution passes full verify", fair_synthesis},
      {6, "simpl_values X^11(legitimate and moved) has no solution", probe11},
      {7, "SAT solver agrees with exhaustive search", sat_oracle},
      {8, "FG check agrees with lasso enumeration", afg_oracle},
      {9, "unrolling agrees with the interpreter on every (y, x)", encoding},
      {10, "explicit bounded check agrees with BMC", cross_layer},
      {11, "DIMACS/QDIMACS lint and DSL round-trip", formats},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Log log;
    const auto start = Clock::now();
    try {
      c.run(log);
    } catch (const std::exception& e) {
      log.expect(false, std::string("exception: ") + e.what());
    }
    std::printf("%s %2d  %s  [%s]\n%s", log.ok ? "PASS" : "FAIL", c.id, c.title, secs(start).c_str(), log.detail.str().c_str());
    std::fflush(stdout);
    failed += !log.ok;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
