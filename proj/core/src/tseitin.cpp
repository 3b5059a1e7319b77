#include "bms/tseitin.hpp"

#include <stdexcept>

namespace bms {

TseitinEncoder::TseitinEncoder(const Circuit& circuit, CnfFormula& sink, std::vector<int> input_vars)
    : circuit_(circuit), sink_(sink), node_var_(circuit.node_count(), 0) {
  if (input_vars.size() < circuit.input_count()) throw std::invalid_argument("tseitin: missing input variables");
  for (std::uint32_t n = 0; n < circuit.node_count(); ++n) {
    if (circuit.kind(n) == Circuit::NodeKind::Input) node_var_[n] = input_vars[circuit.input_index(n)];
  }
}

Lit TseitinEncoder::literal(Circuit::Edge root) {
  if (Circuit::is_const(root)) throw std::invalid_argument("tseitin: constant edge has no literal");
  if (node_var_.size() < circuit_.node_count()) node_var_.resize(circuit_.node_count(), 0);
  auto lit_of = [&](Circuit::Edge e) {
    const int v = node_var_[Circuit::node_of(e)];
    return Circuit::is_negated(e) ? -v : v;
  };
  if (node_var_[Circuit::node_of(root)] == 0) {
    for (const auto n : circuit_.cone(root)) {
      if (node_var_[n] != 0 || n == 0) continue;
      const auto kind = circuit_.kind(n);
      if (kind == Circuit::NodeKind::Input) throw std::logic_error("tseitin: unmapped input");
      const int g = static_cast<int>(sink_.new_var());
      node_var_[n] = g;
      const auto fanins = circuit_.fanins(n);
      if (kind == Circuit::NodeKind::And) {
        Clause big{g};
        for (const auto f : fanins) {
          sink_.add({-g, lit_of(f)});
          big.push_back(-lit_of(f));
        }
        sink_.add(std::move(big));
      } else {
        const Lit a = lit_of(fanins[0]);
        const Lit b = lit_of(fanins[1]);
        sink_.add({-g, a, b});
        sink_.add({-g, -a, -b});
        sink_.add({g, -a, b});
        sink_.add({g, a, -b});
      }
    }
  }
  return lit_of(root);
}

void TseitinEncoder::assert_root(Circuit::Edge root) {
  if (root == Circuit::kTrue) return;
  if (root == Circuit::kFalse) {
    sink_.add({});
    return;
  }
  sink_.add({literal(root)});
}

TseitinResult tseitin(const Circuit& circuit, Circuit::Edge root) {
  TseitinResult out;
  std::vector<int> inputs(circuit.input_count());
  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i] = static_cast<int>(i + 1);
  out.cnf.num_vars = static_cast<std::uint32_t>(inputs.size());
  TseitinEncoder enc(circuit, out.cnf, inputs);
  enc.assert_root(root);
  out.node_literal.assign(circuit.node_count(), 0);
  if (!Circuit::is_const(root)) {
    for (const auto n : circuit.cone(root)) {
      if (n != 0) out.node_literal[n] = enc.literal(n << 1);
    }
  }
  return out;
}

}  // namespace bms
