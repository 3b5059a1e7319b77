#pragma once

// Explicit-state checks of concrete protocols against the unbounded
// properties: deadlock freedom, bounded reachability layers, eventually-always
// (via strongly connected components), closure and the fairness proxy.

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bms/encode.hpp"
#include "bms/ir.hpp"

namespace bms {

struct StateGraph {
  std::vector<State> nodes;  // sorted
  std::vector<std::vector<std::uint32_t>> succ;
  std::vector<std::uint32_t> enabled;  // enabled-rule count per node
  std::vector<bool> initial;

  std::optional<std::uint32_t> find(State s) const;
};

/// All fixed-consistent states of the model, in ascending order.
std::vector<State> all_states(const TemplateModel& m);

/// With `use_init`, the states reachable from the initial ones; otherwise
/// every fixed-consistent state (all of them marked initial).
StateGraph build_state_graph(const TemplateModel& m, const Instantiation& inst = {}, bool use_init = true);

std::vector<State> check_deadlock(const StateGraph& g);

struct Lasso {
  std::vector<State> prefix;  // starts in an initial state unless empty
  std::vector<State> cycle;   // non-empty; last state steps back to cycle[0], or stutters

  std::size_t length() const { return prefix.size() + cycle.size(); }
};

/// FG(phi): no cycle reachable from an initial node contains a node where
/// `phi` is false. A node without successors stutters, i.e. counts as a
/// one-node cycle. Returns a lasso with a shortest prefix otherwise.
std::optional<Lasso> check_afg(const StateGraph& g, const std::vector<bool>& phi);

std::optional<Lasso> check_afg(const TemplateModel& m, const Instantiation& inst, const Predicate& p);

enum class BoundedVerdict { Valid, PropertyFailure, DeadEnd };

const char* to_string(BoundedVerdict v);

struct BoundedResult {
  BoundedVerdict verdict = BoundedVerdict::Valid;
  std::vector<State> trace;  // initial state .. failing state
};

/// Layered exploration: L_0 are the initial states, L_{i+1} their successors.
/// Fails when the predicate is false somewhere in L_from..L_to, or when a
/// state in L_0..L_{to-1} has no successor (a run that ends too early).
BoundedResult check_bounded(const TemplateModel& m, const Instantiation& inst, const PropertyMode& prop);

/// Every fixed-consistent state satisfying the predicate only steps to such states.
std::optional<std::pair<State, State>> check_closure(const TemplateModel& m, const Instantiation& inst, const Predicate& p);

/// FG(legitimate and every machine has moved), on the model augmented with
/// history bits. The lasso's states belong to the augmented model.
std::optional<Lasso> check_fair(const TemplateModel& m, const Instantiation& inst = {});

/// Checks that consecutive lasso states are graph edges and the cycle closes.
bool lasso_replays(const TemplateModel& m, const Instantiation& inst, const Lasso& lasso);

struct VerifyReport {
  std::size_t states = 0;
  std::vector<State> deadlocks;
  std::vector<std::pair<PropertyMode, BoundedResult>> bounded;
  std::optional<Lasso> afg;
  std::optional<std::pair<State, State>> closure;
  std::optional<Lasso> fairness;

  bool all_pass() const;
};

VerifyReport verify_all(const TemplateModel& m, const Instantiation& inst = {},
                        const std::vector<PropertyMode>& bounded = {});

}  // namespace bms
