#pragma once

// Bounded unrolling of a template model into a circuit whose inputs are the
// parameter selector bits, the per-step state variables and per-step rule
// selects. The circuit is true exactly when the inputs describe a run of the
// selected instantiation that violates the bounded property.
//
// A run may stutter only in a state where no rule is enabled, so a deadlock
// before the property's last step counts as a violation instead of silently
// truncating the run.

#include <optional>
#include <string>
#include <vector>

#include "bms/circuit.hpp"
#include "bms/cnf.hpp"
#include "bms/ir.hpp"

namespace bms {

enum class PredicateKind { Legitimate, LegitimateAndMoved, Formula };

struct Predicate {
  PredicateKind kind = PredicateKind::Legitimate;
  Expr formula;  // closed state formula, used by PredicateKind::Formula

  static Predicate legitimate() { return {}; }
  static Predicate legitimate_and_moved() { return {PredicateKind::LegitimateAndMoved, {}}; }
  static Predicate of(Expr formula) { return {PredicateKind::Formula, std::move(formula)}; }

  bool needs_moved() const { return kind == PredicateKind::LegitimateAndMoved; }
  std::string name() const;
};

struct PropertyMode {
  enum class Kind { AtStep, HoldFrom };

  Kind kind = Kind::AtStep;
  std::uint32_t from = 0;  // c
  std::uint32_t to = 0;    // k (equal to c for AtStep)
  Predicate predicate;

  static PropertyMode at(std::uint32_t c, Predicate p = {}) { return {Kind::AtStep, c, c, std::move(p)}; }
  static PropertyMode hold(std::uint32_t c, std::uint32_t k, Predicate p = {});

  std::uint32_t last_step() const { return to; }
  std::string describe() const;
};

/// The model a property is checked on: augmented with per-machine history
/// bits when the predicate mentions them.
struct PreparedModel {
  TemplateModel model;
  Expr all_moved = Expr::constant(true);
};

PreparedModel prepare(const TemplateModel& m, const Predicate& p);

/// Explicit-state evaluation of a predicate on a prepared model.
bool predicate_holds(const PreparedModel& pm, const Predicate& p, const Instantiation& inst, State s);

/// Number of selector bits for a domain of the given size (0 for size 1).
std::uint32_t selector_bits(std::size_t domain_size);

struct InputInfo {
  enum class Kind { ParamBit, State, Select };
  Kind kind = Kind::ParamBit;
  std::uint32_t index = 0;  // ParamId, VarId or rule index
  std::uint32_t step = 0;   // bit position for ParamBit
};

/// Where every model quantity lives in the circuit. Fixed variables map to
/// constant edges; everything else maps to a distinct input.
struct StepVarMap {
  std::vector<std::vector<Circuit::Edge>> state;       // [step][var]
  std::vector<std::vector<Circuit::Edge>> select;      // [step][rule], steps 0..depth-1
  std::vector<std::vector<Circuit::Edge>> param_bits;  // [param][bit], little-endian
  std::vector<InputInfo> inputs;                       // by circuit input index

  std::size_t param_bit_count() const;
  /// Circuit input index of an input edge.
  static std::uint32_t input_of(const Circuit& c, Circuit::Edge e);
};

struct Unrolling {
  PreparedModel prepared;
  PropertyMode prop;
  std::uint32_t depth = 0;
  Circuit circuit;
  StepVarMap map;
  Circuit::Edge in_range = Circuit::kTrue;   // every selector within its domain
  Circuit::Edge violation = Circuit::kFalse;  // in_range ∧ I ∧ T^depth ∧ bad
};

/// Builds the unrolling; `depth` defaults to the property's last step and
/// must not be smaller.
Unrolling unroll(const TemplateModel& m, const PropertyMode& prop, std::optional<std::uint32_t> depth = std::nullopt);

/// A concrete run: states[0..depth], and the rule fired at each step
/// (nullopt for a deadlock stutter).
struct TraceWitness {
  std::vector<State> states;
  std::vector<std::optional<std::uint32_t>> fired;

  friend bool operator==(const TraceWitness&, const TraceWitness&) = default;
};

/// Circuit input assignment from a SAT model over the Tseitin variables
/// (input i is variable i + 1).
std::vector<bool> inputs_from_model(const Unrolling& u, const std::vector<bool>& model);
TraceWitness decode_trace(const Unrolling& u, const std::vector<bool>& inputs);
Instantiation decode_instantiation(const Unrolling& u, const std::vector<bool>& inputs);
/// Assigns the selector bits of `inst` into an input vector.
void encode_instantiation(const Unrolling& u, const Instantiation& inst, std::vector<bool>& inputs);
/// Full input assignment for (inst, trace).
std::vector<bool> encode_inputs(const Unrolling& u, const Instantiation& inst, const TraceWitness& trace);

/// Bounded model checking problem: Tseitin CNF of the violation root. Input i is variable i + 1.
CnfFormula to_bmc_cnf(const Unrolling& u);

struct QbfProblem {
  std::vector<int> universals;
  std::vector<int> existentials;
  CnfFormula matrix;
};

/// Synthesis problem: forall selector bits, exists the rest, of
/// (in_range -> violation). An out-of-range selector satisfies the matrix, so
/// it can never be reported as a solution.
QbfProblem to_qbf(const Unrolling& u);

/// QDIMACS text. The `a` line is omitted when there are no universals.
std::string write_qdimacs(const QbfProblem& q);

/// Human-readable map from circuit inputs to CNF variables, one per line:
/// `param NAME bit B = V`, `state VAR @ T = V`, `select IDX NAME owner M @ T = V`.
std::string write_var_map(const Unrolling& u);

/// Substitutes the non-parameter inputs of the violation circuit with the
/// values in `trace`. The result (inputs are the selector bits, in order) is
/// true exactly for instantiations under which `trace` is a violating run.
struct ParamCircuit {
  Circuit circuit;
  Circuit::Edge root = Circuit::kFalse;
};
ParamCircuit cofactor_params(const Unrolling& u, const TraceWitness& trace);

/// Like cofactor_params but keeps only the states of `trace`: true for every
/// instantiation under which some rule choice realizes that state sequence
/// as a violating run. Strictly weaker as a constraint, hence a stronger
/// refinement.
ParamCircuit state_sequence_condition(const Unrolling& u, const std::vector<State>& states);

/// True for every instantiation under which the run from the trace's initial
/// state violates the property when each step fires the first enabled rule
/// at or after the one the trace fired (cyclically), stuttering only when
/// none is enabled. That run exists under every instantiation, so the
/// condition follows the instantiation instead of pinning the trace's states.
ParamCircuit scheduled_run_condition(const Unrolling& u, const TraceWitness& trace);

/// Builds many refinement conditions into one circuit over the selector
/// bits, so structurally equal pieces (a rule's enabledness in a given
/// state, a transition between two given states) are shared between them.
class RefinementCircuit {
 public:
  explicit RefinementCircuit(const Unrolling& u);

  const Circuit& circuit() const { return circuit_; }
  Circuit take_circuit() && { return std::move(circuit_); }

  Circuit::Edge in_range();
  /// See state_sequence_condition.
  Circuit::Edge state_sequence(const std::vector<State>& states);
  /// See scheduled_run_condition.
  Circuit::Edge scheduled_run(const TraceWitness& trace);
  /// Every state satisfying `p` (history bits clear) only steps to states
  /// satisfying `p`. `p` must not read history bits.
  Circuit::Edge closed(const Predicate& p);
  /// Copies a condition built elsewhere (inputs are the selector bits).
  Circuit::Edge import(const ParamCircuit& pc);

 private:
  const Unrolling& u_;
  Circuit circuit_;
  std::vector<std::vector<Circuit::Edge>> bits_;
};

}  // namespace bms
