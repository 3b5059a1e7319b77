#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bms {

/// DIMACS-style literal: +v or -v for variable v >= 1.
using Lit = int;
using Clause = std::vector<Lit>;

struct CnfFormula {
  std::uint32_t num_vars = 0;
  std::vector<Clause> clauses;

  std::uint32_t new_var() { return ++num_vars; }
  void add(Clause c) { clauses.push_back(std::move(c)); }

  friend bool operator==(const CnfFormula&, const CnfFormula&) = default;
};

class DimacsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checks an assignment (index v holds the value of variable v; index 0 unused)
/// against every clause.
bool satisfies(const CnfFormula& f, const std::vector<bool>& model);

std::string write_dimacs(const CnfFormula& f);

/// Strict reader: comment lines start with 'c', exactly one "p cnf V C" header,
/// clause count and variable bound must match the header.
CnfFormula read_dimacs(std::string_view text);

}  // namespace bms
