#pragma once

// Circuit to CNF. Every AND node of arity n gets n + 1 clauses, every XOR node
// 4; negations ride on literals. Inputs map to caller-chosen variables.

#include <vector>

#include "bms/circuit.hpp"
#include "bms/cnf.hpp"

namespace bms {

/// Encodes circuit cones on demand into a growing CnfFormula. Each node is
/// defined at most once per encoder.
class TseitinEncoder {
 public:
  /// `input_vars[i]` is the CNF variable standing for circuit input i.
  TseitinEncoder(const Circuit& circuit, CnfFormula& sink, std::vector<int> input_vars);

  /// Literal equivalent to `root`, defining any missing gates first.
  /// Constant edges have no literal; callers handle them (see assert_root).
  Lit literal(Circuit::Edge root);

  /// Adds clauses forcing `root` true (an empty clause if it is constant false).
  void assert_root(Circuit::Edge root);

 private:
  const Circuit& circuit_;
  CnfFormula& sink_;
  std::vector<int> node_var_;  // 0 = not yet encoded
};

struct TseitinResult {
  CnfFormula cnf;
  /// CNF literal of every circuit node reachable from the root (0 when the
  /// node is outside the cone or constant).
  std::vector<Lit> node_literal;
};

/// Full-biconditional encoding of `root` plus a unit clause asserting it.
/// Circuit input i becomes CNF variable i + 1, whether or not it is used.
TseitinResult tseitin(const Circuit& circuit, Circuit::Edge root);

}  // namespace bms
