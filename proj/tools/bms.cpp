// bms: bounded model synthesis driver.
//
//   bms synth  --template single_rule --prop legitimate --at 4
//   bms verify --solution section2_solution --fg --fair
//   bms export --template single_rule --at 4 --export out/
//
// Exit codes: 0 solution / all checks pass, 1 no solution / a check fails,
// 2 budget exhausted, 3 usage or input error, 4 a synthesized solution failed
// its own verification.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bms/dsl.hpp"
#include "bms/encode.hpp"
#include "bms/ringlab.hpp"
#include "bms/synth.hpp"
#include "bms/verify.hpp"

namespace {

using namespace bms;

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitBudget = 2;
constexpr int kExitError = 3;
constexpr int kExitSelfCheck = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Job {
  std::string template_name;
  std::string model_path;
  std::string solution_name;
  std::string inst_text;
  std::string prop = "legitimate";
  std::optional<std::uint32_t> at;
  std::optional<std::uint32_t> hold_from;
  std::optional<std::uint32_t> hold_to;
  std::optional<std::uint32_t> depth;
  std::optional<double> budget_secs;
  std::optional<std::uint64_t> iters;
  bool brute = false;
  unsigned jobs = 1;
  std::uint64_t seed = 0x5eed;
  bool closed = false;
  bool fg = false;
  bool fair = false;
  std::string export_dir;
  std::string format = "text";
  bool timing = false;
};

// Key-value report; structured mode prints `key=value`, text mode aligns.
class Report {
 public:
  explicit Report(bool structured) : structured_(structured) {}

  void put(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
  void put(const std::string& key, std::uint64_t value) { put(key, std::to_string(value)); }
  void block(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    std::size_t i = 0;
    for (std::string line; std::getline(in, line); ++i) put(key + "." + std::to_string(i), line);
  }

  void print(std::ostream& out) const {
    std::size_t width = 0;
    for (const auto& [k, v] : rows_) width = std::max(width, k.size());
    for (const auto& [k, v] : rows_) {
      if (structured_) {
        out << k << "=" << v << "\n";
      } else {
        out << k << std::string(width - k.size() + 2, ' ') << v << "\n";
      }
    }
  }

 private:
  bool structured_;
  std::vector<std::pair<std::string, std::string>> rows_;
};

Predicate parse_predicate(const std::string& name) {
  if (name == "legitimate") return Predicate::legitimate();
  if (name == "legitimate_and_M" || name == "legitimate_and_m") return Predicate::legitimate_and_moved();
  throw UsageError("unknown property '" + name + "' (expected legitimate or legitimate_and_M)");
}

std::optional<PropertyMode> property_of(const Job& job) {
  const auto pred = parse_predicate(job.prop);
  if (job.at && (job.hold_from || job.hold_to)) throw UsageError("--at cannot be combined with --hold-from/--to");
  if (job.at) return PropertyMode::at(*job.at, pred);
  if (job.hold_from || job.hold_to) {
    if (!job.hold_from || !job.hold_to) throw UsageError("--hold-from and --to go together");
    if (*job.hold_to < *job.hold_from) throw UsageError("--to must not be smaller than --hold-from");
    return PropertyMode::hold(*job.hold_from, *job.hold_to, pred);
  }
  return std::nullopt;
}

PropertyMode required_property(const Job& job) {
  const auto p = property_of(job);
  if (!p) throw UsageError("a property step is required (--at C or --hold-from C --to K)");
  return *p;
}

struct Loaded {
  TemplateModel model;
  std::string label;
  Instantiation inst;
  std::string note;
};

Instantiation parse_inst(const TemplateModel& m, const std::string& text) {
  Instantiation inst;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      std::size_t used = 0;
      const auto v = std::stoul(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      inst.choice.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::exception&) {
      throw UsageError("malformed --inst entry '" + item + "'");
    }
  }
  if (inst.choice.size() != m.params.size()) {
    throw UsageError("--inst has " + std::to_string(inst.choice.size()) + " entries, model has " +
                     std::to_string(m.params.size()) + " params");
  }
  for (std::size_t p = 0; p < m.params.size(); ++p) {
    if (inst.choice[p] >= m.params[p].domain.size()) throw UsageError("--inst entry out of range for " + m.params[p].name);
  }
  return inst;
}

Loaded load(const Job& job, bool allow_solution) {
  const int sources = !job.template_name.empty() + !job.model_path.empty() + !job.solution_name.empty();
  if (sources != 1) {
    throw UsageError(allow_solution ? "give exactly one of --template, --model, --solution"
                                    : "give exactly one of --template, --model");
  }
  Loaded out;
  if (!job.template_name.empty()) {
    const auto t = template_from_string(job.template_name);
    if (!t) throw UsageError("unknown template '" + job.template_name + "'");
    out.model = build_template(*t);
    out.label = job.template_name;
  } else if (!job.model_path.empty()) {
    if (!std::filesystem::exists(job.model_path)) throw UsageError("model file not found: " + job.model_path);
    out.model = load_model(job.model_path);
    out.label = job.model_path;
  } else {
    if (!allow_solution) throw UsageError("--solution is only accepted by verify");
    const auto s = known_solution_from_string(job.solution_name);
    if (!s) throw UsageError("unknown solution '" + job.solution_name + "'");
    auto known = known_solution(*s);
    out.model = std::move(known.model);
    out.label = job.solution_name;
    out.note = known.reading;
  }
  if (!job.inst_text.empty()) out.inst = parse_inst(out.model, job.inst_text);
  return out;
}

std::string state_text(const TemplateModel& m, State s) {
  std::string out;
  for (std::uint32_t f = 0; f < m.families.size(); ++f) {
    if (!out.empty()) out += ' ';
    out += m.families[f].name + "=";
    const auto base = m.family_base(f).index;
    const auto count = m.families[f].indexed ? m.machines : 1;
    for (std::uint32_t i = 0; i < count; ++i) out += s.get(VarId{base + i}) ? '1' : '0';
  }
  return out;
}

void put_lasso(Report& r, const std::string& key, const TemplateModel& m, const Lasso& lasso, bool states) {
  r.put(key + ".prefix", lasso.prefix.size());
  r.put(key + ".cycle", lasso.cycle.size());
  if (!states) return;
  std::size_t i = 0;
  for (const auto s : lasso.prefix) r.put(key + ".state." + std::to_string(i++), state_text(m, s));
  for (const auto s : lasso.cycle) r.put(key + ".state." + std::to_string(i++), state_text(m, s) + " (cycle)");
}

// Runs every check on a concrete protocol. Returns true when all pass.
bool verify_section(Report& r, const TemplateModel& m, const Instantiation& inst, const std::vector<PropertyMode>& bounded,
                    bool fg_states, bool fair_states) {
  const auto rep = verify_all(m, inst, bounded);
  r.put("verify.states", rep.states);
  r.put("verify.deadlock", rep.deadlocks.empty() ? "valid" : "deadlocks");
  r.put("verify.deadlock.count", rep.deadlocks.size());
  for (const auto& [prop, res] : rep.bounded) {
    const auto key = "verify.bounded." + prop.predicate.name() + "." + prop.describe();
    r.put(key, to_string(res.verdict));
    if (res.verdict != BoundedVerdict::Valid) r.put(key + ".trace_length", res.trace.size());
  }
  r.put("verify.afg", rep.afg ? "lasso" : "valid");
  if (rep.afg) put_lasso(r, "verify.afg", m, *rep.afg, fg_states);
  r.put("verify.closure", rep.closure ? "violation" : "valid");
  if (rep.closure) {
    r.put("verify.closure.from", state_text(m, rep.closure->first));
    r.put("verify.closure.to", state_text(m, rep.closure->second));
  }
  r.put("verify.fair", rep.fairness ? "lasso" : "valid");
  if (rep.fairness) put_lasso(r, "verify.fair", prepare(m, Predicate::legitimate_and_moved()).model, *rep.fairness, fair_states);
  r.put("verify.all", rep.all_pass() ? "pass" : "fail");
  return rep.all_pass();
}

std::optional<double> budget_from_env() {
  const char* env = std::getenv("BMS_BUDGET_SECS");
  if (!env || !*env) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(env, &end);
  if (*end != '\0' || !(v > 0)) throw UsageError("BMS_BUDGET_SECS must be a positive number");
  return v;
}

int cmd_synth(const Job& job, std::ostream& out) {
  const auto loaded = load(job, false);
  const auto prop = required_property(job);
  Report r(job.format == "structured");
  r.put("command", "synth");
  r.put("model", loaded.label);
  r.put("property", prop.predicate.name());
  r.put("mode", prop.describe());
  r.put("depth", job.depth.value_or(prop.last_step()));
  r.put("engine", job.brute ? "brute_force" : "cegis");
  if (job.closed) r.put("closure", "required");
  r.put("seed", job.seed);

  SynthBudget budget;
  budget.wall_seconds = job.budget_secs ? job.budget_secs : budget_from_env();
  if (!budget.wall_seconds) budget.wall_seconds = 600.0;
  if (*budget.wall_seconds <= 0) throw UsageError("--budget-secs must be positive");
  budget.max_iterations = job.iters;

  SynthOutcome result;
  try {
    if (job.brute) {
      result = brute_force(loaded.model, prop, job.depth, BruteForceOptions{budget, job.seed, job.jobs});
    } else if (loaded.model.params.empty()) {
      // Nothing to choose: a single bounded check decides.
      const auto start = std::chrono::steady_clock::now();
      SolverOptions opts;
      opts.seed = job.seed;
      opts.deadline = budget.deadline_from(start);
      const bool valid = check_candidate(loaded.model, {}, prop, job.depth, opts).valid() &&
                         !(job.closed && check_closure(loaded.model, {}, Predicate::legitimate()));
      result.kind = valid ? SynthKind::Solution : SynthKind::NoSolution;
      if (valid) result.inst = Instantiation{};
      result.stats.iterations = result.stats.check_queries = 1;
    } else {
      CegisOptions opts;
      opts.budget = budget;
      opts.seed = job.seed;
      opts.require_closure = job.closed;
      result = cegis(loaded.model, prop, job.depth, opts);
    }
  } catch (const BudgetExceeded&) {
    result.kind = SynthKind::Budget;
  } catch (const SelfCheckFailed& e) {
    r.put("outcome", "self_check_failed");
    r.put("error", e.what());
    r.print(out);
    return kExitSelfCheck;
  }

  r.put("outcome", to_string(result.kind));
  r.put("iterations", result.stats.iterations);
  r.put("candidate_queries", result.stats.candidate_queries);
  r.put("check_queries", result.stats.check_queries);
  if (job.timing) r.put("time_ms", static_cast<std::uint64_t>(result.stats.wall_ms));
  if (result.kind != SynthKind::Solution) {
    r.print(out);
    return result.kind == SynthKind::NoSolution ? kExitNegative : kExitBudget;
  }

  std::string choice;
  for (std::size_t p = 0; p < result.inst->choice.size(); ++p) {
    const auto& param = loaded.model.params[p];
    r.put("solution.param." + param.name, render_expr(loaded.model, param.domain[result.inst->choice[p]]));
    choice += (p ? "," : "") + std::to_string(result.inst->choice[p]);
  }
  r.put("solution.inst", choice);
  const auto concrete = instantiate(loaded.model, *result.inst);
  r.block("solution.rule", render_rule_listing(concrete));

  // Independent explicit-state confirmation of the synthesized bound.
  const auto bounded = check_bounded(loaded.model, *result.inst, prop);
  if (bounded.verdict != BoundedVerdict::Valid) {
    r.put("outcome", "self_check_failed");
    r.put("error", std::string("explicit-state check: ") + to_string(bounded.verdict));
    r.print(out);
    return kExitSelfCheck;
  }
  verify_section(r, loaded.model, *result.inst, {prop}, job.fg, job.fair);
  r.print(out);
  if (job.format != "structured") out << "\n" << render_instantiation(loaded.model, *result.inst);
  return kExitOk;
}

int cmd_verify(const Job& job, std::ostream& out) {
  const auto loaded = load(job, true);
  if (!loaded.model.params.empty() && loaded.inst.choice.size() != loaded.model.params.size()) {
    throw UsageError("model has params; pass --inst with one domain index per param");
  }
  Report r(job.format == "structured");
  r.put("command", "verify");
  r.put("model", loaded.label);
  if (!loaded.note.empty()) r.put("reading", loaded.note);
  std::vector<PropertyMode> bounded;
  if (const auto p = property_of(job)) bounded.push_back(*p);
  const bool pass = verify_section(r, loaded.model, loaded.inst, bounded, job.fg, job.fair);
  r.print(out);
  return pass ? kExitOk : kExitNegative;
}

int cmd_export(const Job& job, std::ostream& out) {
  const auto loaded = load(job, false);
  const auto prop = required_property(job);
  if (job.export_dir.empty()) throw UsageError("export needs --export DIR");
  const auto u = unroll(loaded.model, prop, job.depth);
  std::filesystem::create_directories(job.export_dir);
  const auto stem = (std::filesystem::path(job.export_dir) /
                     (loaded.model.name + "_" + prop.predicate.name() + "_" + std::to_string(u.depth)))
                        .string();
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
  };
  const auto cnf = to_bmc_cnf(u);
  const auto qbf = to_qbf(u);
  write(stem + ".cnf", write_dimacs(cnf));
  write(stem + ".qdimacs", write_qdimacs(qbf));
  write(stem + ".map", write_var_map(u));
  Report r(job.format == "structured");
  r.put("command", "export");
  r.put("model", loaded.label);
  r.put("cnf", stem + ".cnf");
  r.put("cnf.vars", cnf.num_vars);
  r.put("cnf.clauses", cnf.clauses.size());
  r.put("qdimacs", stem + ".qdimacs");
  r.put("qdimacs.universals", qbf.universals.size());
  r.put("qdimacs.existentials", qbf.existentials.size());
  r.put("map", stem + ".map");
  r.print(out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounded model synthesis for guarded-command ring protocols"};
  app.require_subcommand(1);
  Job job;

  auto add_common = [&](CLI::App* sub, bool with_solution) {
    auto* tmpl = sub->add_option("--template", job.template_name, "Built-in template name");
    auto* model = sub->add_option("--model", job.model_path, "Model file (.bms)");
    tmpl->excludes(model);
    if (with_solution) {
      auto* sol = sub->add_option("--solution", job.solution_name, "Known protocol from the case study");
      sol->excludes(tmpl)->excludes(model);
    }
    sub->add_option("--prop", job.prop, "legitimate | legitimate_and_M")->capture_default_str();
    sub->add_option("--at", job.at, "Check the property at step C");
    sub->add_option("--hold-from", job.hold_from, "Check the property at every step from C ...");
    sub->add_option("--to", job.hold_to, "... to K");
    sub->add_option("--seed", job.seed, "Solver seed")->capture_default_str();
    sub->add_option("--format", job.format, "text | structured")
        ->check(CLI::IsMember({"text", "structured"}))
        ->capture_default_str();
  };

  auto* synth = app.add_subcommand("synth", "Complete a template so that the bounded property holds");
  add_common(synth, false);
  synth->add_option("--depth", job.depth, "Unrolling depth (default: last property step)");
  synth->add_option("--budget-secs", job.budget_secs, "Wall-clock budget (default $BMS_BUDGET_SECS or 600)");
  synth->add_option("--iters", job.iters, "Iteration cap");
  synth->add_flag("--brute", job.brute, "Enumerate instantiations instead of CEGIS");
  synth->add_flag("--closed", job.closed, "Also require legitimate states to be closed under every step")
      ->excludes("--brute");
  synth->add_option("--jobs", job.jobs, "Worker threads for --brute")->check(CLI::Range(1U, 256U));
  synth->add_flag("--fg", job.fg, "Print the states of an FG(legitimate) lasso");
  synth->add_flag("--fair", job.fair, "Print the states of a fairness lasso");
  synth->add_flag("--timing", job.timing, "Report wall time (makes output run-dependent)");

  auto* verify = app.add_subcommand("verify", "Check a concrete protocol");
  add_common(verify, true);
  verify->add_option("--inst", job.inst_text, "Comma-separated domain indices, one per param");
  verify->add_flag("--fg", job.fg, "Print the states of an FG(legitimate) lasso");
  verify->add_flag("--fair", job.fair, "Print the states of a fairness lasso");

  auto* exp = app.add_subcommand("export", "Write the bounded problem as DIMACS and QDIMACS");
  add_common(exp, false);
  exp->add_option("--depth", job.depth, "Unrolling depth (default: last property step)");
  exp->add_option("--export", job.export_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (synth->parsed()) return cmd_synth(job, std::cout);
    if (verify->parsed()) return cmd_verify(job, std::cout);
    return cmd_export(job, std::cout);
  } catch (const ParseError& e) {
    std::cerr << "bms: " << job.model_path << ":" << e.span().line << ":" << e.span().column << ": " << e.what() << "\n";
  } catch (const UsageError& e) {
    std::cerr << "bms: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "bms: error: " << e.what() << "\n";
  }
  return kExitError;
}
