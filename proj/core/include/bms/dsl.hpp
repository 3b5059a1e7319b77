#pragma once

// Textual `.bms` front end for template models.
//
//   system ring4 {
//     machines 4;
//     topology ring;
//     var A[4] : bool;
//     fix A[0] = false;
//     param c = { A == A_R, A != A_L };
//     init true;
//     rule r owner 1 : ?c & B_R => A := !A, B := false;
//     share 2 rules of 1;
//   }
//
// Inside rules and param domains an indexed family name refers to the owning
// machine's element, NAME_L / NAME_R to the ring neighbors, NAME[k] to an
// absolute element.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "bms/ir.hpp"

namespace bms {

struct SourceSpan {
  std::size_t line = 1;    // 1-based
  std::size_t column = 1;  // 1-based
  std::size_t begin = 0;   // byte offsets, begin <= end
  std::size_t end = 0;
};

enum class ParseErrorKind { Lex, Syntax, UnknownIdent, DuplicateIdent, ArityOrVisibility };

std::string_view to_string(ParseErrorKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, SourceSpan span, const std::string& message);

  ParseErrorKind kind() const { return kind_; }
  const SourceSpan& span() const { return span_; }

 private:
  ParseErrorKind kind_;
  SourceSpan span_;
};

/// Parses a complete `.bms` document. Throws ParseError on the first problem.
TemplateModel parse_model(std::string_view text);

/// Reads and parses a `.bms` file; I/O failures throw std::runtime_error.
TemplateModel load_model(const std::string& path);

/// Canonical text; parse_model(render_model(m)) == m for every valid model
/// without history variables.
std::string render_model(const TemplateModel& m);

/// Owner-relative references print as NAME / NAME_L / NAME_R, absolute ones as
/// NAME[k].
std::string render_expr(const TemplateModel& m, const Expr& e);

/// The concrete protocol obtained from `inst`: an IF/THEN/ENDIF listing per
/// machine in a comment header, followed by the instantiated model as DSL text.
std::string render_instantiation(const TemplateModel& m, const Instantiation& inst);

/// Just the IF/THEN/ENDIF listing lines, one per rule.
std::string render_rule_listing(const TemplateModel& concrete);

}  // namespace bms
