#include "bms/cnf.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>

namespace bms {

bool satisfies(const CnfFormula& f, const std::vector<bool>& model) {
  for (const auto& clause : f.clauses) {
    bool sat = false;
    for (const Lit l : clause) {
      const auto v = static_cast<std::size_t>(std::abs(l));
      if (v >= model.size()) return false;
      if (model[v] == (l > 0)) {
        sat = true;
        break;
      }
    }
    if (!sat) return false;
  }
  return true;
}

std::string write_dimacs(const CnfFormula& f) {
  std::string out = "p cnf " + std::to_string(f.num_vars) + " " + std::to_string(f.clauses.size()) + "\n";
  for (const auto& clause : f.clauses) {
    for (const Lit l : clause) {
      out += std::to_string(l);
      out += ' ';
    }
    out += "0\n";
  }
  return out;
}

namespace {

bool parse_int(std::string_view token, long long& value) {
  if (!token.empty() && token.front() == '+') return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  return ec == std::errc{} && ptr == token.data() + token.size();
}

}  // namespace

CnfFormula read_dimacs(std::string_view text) {
  CnfFormula f;
  bool header = false;
  long long declared_clauses = 0;
  Clause current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    const auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const auto where = "line " + std::to_string(line_no) + ": ";
    std::istringstream in{std::string(line)};
    std::string tok;
    if (!(in >> tok)) continue;
    if (tok == "c" || tok.front() == 'c') continue;
    if (tok == "p") {
      if (header) throw DimacsError(where + "duplicate header");
      std::string fmt, vars, clauses, extra;
      if (!(in >> fmt >> vars >> clauses) || fmt != "cnf" || (in >> extra)) throw DimacsError(where + "malformed header");
      long long v = 0, c = 0;
      if (!parse_int(vars, v) || !parse_int(clauses, c) || v < 0 || c < 0 || v > INT32_MAX) {
        throw DimacsError(where + "malformed header counts");
      }
      f.num_vars = static_cast<std::uint32_t>(v);
      declared_clauses = c;
      header = true;
      continue;
    }
    if (!header) throw DimacsError(where + "clause before header");
    do {
      long long lit = 0;
      if (!parse_int(tok, lit)) throw DimacsError(where + "malformed literal '" + tok + "'");
      if (lit == 0) {
        f.clauses.push_back(std::move(current));
        current.clear();
        continue;
      }
      if (std::llabs(lit) > f.num_vars) throw DimacsError(where + "literal " + tok + " exceeds declared variable count");
      current.push_back(static_cast<Lit>(lit));
    } while (in >> tok);
  }
  if (!header) throw DimacsError("missing 'p cnf' header");
  if (!current.empty()) throw DimacsError("last clause is not terminated by 0");
  if (static_cast<long long>(f.clauses.size()) != declared_clauses) {
    throw DimacsError("header declares " + std::to_string(declared_clauses) + " clauses, found " +
                      std::to_string(f.clauses.size()));
  }
  return f;
}

}  // namespace bms
