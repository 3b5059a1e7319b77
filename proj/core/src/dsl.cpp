#include "bms/dsl.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace bms {

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::Lex: return "lex";
    case ParseErrorKind::Syntax: return "syntax";
    case ParseErrorKind::UnknownIdent: return "unknown-identifier";
    case ParseErrorKind::DuplicateIdent: return "duplicate-identifier";
    case ParseErrorKind::ArityOrVisibility: return "arity-or-visibility";
  }
  return "?";
}

namespace {

std::string format_error(ParseErrorKind kind, const SourceSpan& span, const std::string& message) {
  std::ostringstream out;
  out << span.line << ":" << span.column << ": " << to_string(kind) << " error: " << message;
  return out.str();
}

}  // namespace

ParseError::ParseError(ParseErrorKind kind, SourceSpan span, const std::string& message)
    : std::runtime_error(format_error(kind, span, message)), kind_(kind), span_(span) {}

namespace {

enum class Tok { Ident, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceSpan span;
};

const std::set<std::string, std::less<>> kKeywords = {
    "system", "machines", "topology", "ring", "var",   "bool",  "fix",  "param",
    "init",   "rule",     "owner",    "share", "rules", "of",    "true", "false",
};

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.span = SourceSpan{line, col, i, i};
    std::size_t len = 0;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Tok::Ident;
      while (i + len < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i + len])) || text[i + len] == '_')) {
        ++len;
      }
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      t.kind = Tok::Int;
      while (i + len < text.size() && std::isdigit(static_cast<unsigned char>(text[i + len]))) ++len;
    } else {
      t.kind = Tok::Punct;
      static constexpr std::string_view two[] = {":=", "==", "!=", "=>"};
      for (auto p : two) {
        if (text.substr(i, 2) == p) len = 2;
      }
      if (len == 0) {
        static constexpr std::string_view one = "{}[]();:,=!&|?";
        if (one.find(c) == std::string_view::npos) {
          t.span.end = i + 1;
          throw ParseError(ParseErrorKind::Lex, t.span, std::string("unexpected character '") + c + "'");
        }
        len = 1;
      }
    }
    t.text = std::string(text.substr(i, len));
    t.span.end = i + len;
    advance(len);
    out.push_back(std::move(t));
  }
  Token end;
  end.span = SourceSpan{line, col, text.size(), text.size()};
  out.push_back(end);
  return out;
}

// Where an expression is being parsed; decides which references are legal.
struct Scope {
  bool allow_local = false;
  bool allow_choice = false;
  std::optional<std::uint32_t> owner;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(lex(text)) {}

  TemplateModel parse() {
    expect_keyword("system");
    model_.name = expect_ident("system name").text;
    expect("{");
    while (!is("}")) {
      if (peek().kind == Tok::End) fail(ParseErrorKind::Syntax, peek(), "unexpected end of input, expected '}'");
      item();
    }
    const Token close = next();
    if (peek().kind != Tok::End) fail(ParseErrorKind::Syntax, peek(), "trailing input after system");
    if (model_.rules.empty()) fail(ParseErrorKind::Syntax, close, "system declares no rules");
    try {
      validate(model_);
    } catch (const ModelError& e) {
      fail(ParseErrorKind::ArityOrVisibility, close, e.what());
    }
    return std::move(model_);
  }

 private:
  [[noreturn]] void fail(ParseErrorKind kind, const Token& at, const std::string& message) const {
    throw ParseError(kind, at.span, message);
  }

  const Token& peek(std::size_t ahead = 0) const {
    const auto idx = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[idx];
  }
  Token next() {
    Token t = peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }
  bool is(std::string_view punct) const { return peek().kind == Tok::Punct && peek().text == punct; }
  bool is_keyword(std::string_view kw) const { return peek().kind == Tok::Ident && peek().text == kw; }
  bool accept(std::string_view punct) {
    if (!is(punct)) return false;
    next();
    return true;
  }
  Token expect(std::string_view punct) {
    if (!is(punct)) fail(ParseErrorKind::Syntax, peek(), "expected '" + std::string(punct) + "', found '" + describe(peek()) + "'");
    return next();
  }
  void expect_keyword(std::string_view kw) {
    if (!is_keyword(kw)) fail(ParseErrorKind::Syntax, peek(), "expected '" + std::string(kw) + "', found '" + describe(peek()) + "'");
    next();
  }
  Token expect_ident(const std::string& what) {
    if (peek().kind != Tok::Ident || kKeywords.contains(peek().text)) {
      fail(ParseErrorKind::Syntax, peek(), "expected " + what + ", found '" + describe(peek()) + "'");
    }
    return next();
  }
  std::uint32_t expect_int(const std::string& what) {
    if (peek().kind != Tok::Int) fail(ParseErrorKind::Syntax, peek(), "expected " + what);
    const Token t = next();
    std::uint32_t value = 0;
    const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc{}) fail(ParseErrorKind::Syntax, t, "integer out of range");
    return value;
  }
  static std::string describe(const Token& t) { return t.kind == Tok::End ? "end of input" : t.text; }

  void item() {
    const Token head = peek();
    if (head.kind != Tok::Ident) fail(ParseErrorKind::Syntax, head, "expected a declaration, found '" + describe(head) + "'");
    if (head.text == "machines") return machines_item();
    if (head.text == "topology") return topology_item();
    if (head.text == "var") return var_item();
    if (head.text == "fix") return fix_item();
    if (head.text == "param") return param_item();
    if (head.text == "init") return init_item();
    if (head.text == "rule") return rule_item();
    if (head.text == "share") return share_item();
    fail(ParseErrorKind::Syntax, head, "unknown declaration '" + head.text + "'");
  }

  void require_header_open(const Token& at) const {
    if (body_started_) fail(ParseErrorKind::Syntax, at, "'" + at.text + "' must precede variable and rule declarations");
  }

  void machines_item() {
    const Token kw = next();
    require_header_open(kw);
    if (seen_machines_) fail(ParseErrorKind::DuplicateIdent, kw, "machine count declared twice");
    seen_machines_ = true;
    const Token at = peek();
    model_.machines = expect_int("machine count");
    if (model_.machines == 0) fail(ParseErrorKind::ArityOrVisibility, at, "machine count must be positive");
    expect(";");
  }

  void topology_item() {
    const Token kw = next();
    require_header_open(kw);
    const Token t = peek();
    expect_keyword("ring");
    if (model_.ring) fail(ParseErrorKind::DuplicateIdent, t, "topology declared twice");
    model_.ring = true;
    expect(";");
  }

  void declare_name(const Token& t) {
    if (names_.contains(t.text)) fail(ParseErrorKind::DuplicateIdent, t, "'" + t.text + "' is already declared");
    names_.insert(t.text);
  }

  void var_item() {
    next();
    body_started_ = true;
    const Token name = expect_ident("variable name");
    declare_name(name);
    bool indexed = false;
    if (accept("[")) {
      const Token at = peek();
      const auto size = expect_int("array size");
      if (size != model_.machines) {
        fail(ParseErrorKind::ArityOrVisibility, at,
             "array size " + std::to_string(size) + " must equal the machine count " + std::to_string(model_.machines));
      }
      expect("]");
      indexed = true;
    }
    // Reject names that collide with neighbor sugar in either direction.
    auto clash = [&](const std::string& other) { return names_.contains(other) && model_.find_family(other); };
    if (indexed && (clash(name.text + "_L") || clash(name.text + "_R"))) {
      fail(ParseErrorKind::DuplicateIdent, name, "'" + name.text + "' collides with a declared neighbor name");
    }
    if (name.text.size() > 2 && (name.text.ends_with("_L") || name.text.ends_with("_R"))) {
      const auto base = model_.find_family(name.text.substr(0, name.text.size() - 2));
      if (base && model_.families[*base].indexed) {
        fail(ParseErrorKind::DuplicateIdent, name, "'" + name.text + "' collides with neighbor sugar");
      }
    }
    expect(":");
    expect_keyword("bool");
    expect(";");
    try {
      add_family(model_, name.text, indexed);
    } catch (const ModelError& e) {
      fail(ParseErrorKind::ArityOrVisibility, name, e.what());
    }
  }

  // Absolute lvalue used by `fix`.
  VarId absolute_lval() {
    const Token name = expect_ident("variable");
    const auto fam = model_.find_family(name.text);
    if (!fam) fail(ParseErrorKind::UnknownIdent, name, "unknown variable '" + name.text + "'");
    if (model_.families[*fam].indexed) {
      if (!accept("[")) fail(ParseErrorKind::ArityOrVisibility, name, "'" + name.text + "' needs an index here");
      const Token at = peek();
      const auto k = expect_int("index");
      if (k >= model_.machines) fail(ParseErrorKind::ArityOrVisibility, at, "index out of range");
      expect("]");
      return VarId{model_.family_base(*fam).index + k};
    }
    if (is("[")) fail(ParseErrorKind::ArityOrVisibility, peek(), "'" + name.text + "' is not an array");
    return model_.family_base(*fam);
  }

  void fix_item() {
    next();
    body_started_ = true;
    const Token at = peek();
    const VarId v = absolute_lval();
    expect("=");
    bool value = false;
    if (is_keyword("true")) {
      value = true;
    } else if (!is_keyword("false")) {
      fail(ParseErrorKind::Syntax, peek(), "expected 'true' or 'false'");
    }
    next();
    expect(";");
    if (model_.fixed[v.index]) fail(ParseErrorKind::DuplicateIdent, at, model_.var_name(v) + " is already fixed");
    for (const auto& r : model_.rules) {
      for (const auto& u : r.updates) {
        if (u.target == v) fail(ParseErrorKind::ArityOrVisibility, at, model_.var_name(v) + " is assigned by rule " + r.name);
      }
    }
    model_.fixed[v.index] = value;
  }

  void param_item() {
    next();
    body_started_ = true;
    const Token name = expect_ident("parameter name");
    declare_name(name);
    expect("=");
    expect("{");
    ChoiceParam p{name.text, {}};
    const Scope scope{true, false, std::nullopt};
    p.domain.push_back(expr(scope));
    while (accept(",")) p.domain.push_back(expr(scope));
    expect("}");
    expect(";");
    model_.params.push_back(std::move(p));
  }

  void init_item() {
    next();
    body_started_ = true;
    const Expr e = expr(Scope{});
    expect(";");
    model_.init = seen_init_ ? Expr::conjunction(model_.init, e) : e;
    seen_init_ = true;
  }

  void rule_item() {
    next();
    body_started_ = true;
    const Token name = expect_ident("rule name");
    if (!rule_names_.insert(name.text).second) fail(ParseErrorKind::DuplicateIdent, name, "rule '" + name.text + "' already declared");
    expect_keyword("owner");
    const Token at = peek();
    const auto owner = expect_int("owner machine");
    if (owner >= model_.machines) fail(ParseErrorKind::ArityOrVisibility, at, "owner " + std::to_string(owner) + " out of range");
    expect(":");
    const Scope scope{true, true, owner};
    Rule r{name.text, owner, expr(scope), {}, std::nullopt};
    expect("=>");
    do {
      const Token target_at = peek();
      const VarId target = assign_target(owner);
      for (const auto& u : r.updates) {
        if (u.target == target) fail(ParseErrorKind::DuplicateIdent, target_at, model_.var_name(target) + " assigned twice");
      }
      expect(":=");
      r.updates.push_back(Update{target, expr(scope)});
    } while (accept(","));
    expect(";");
    model_.rules.push_back(std::move(r));
  }

  VarId assign_target(std::uint32_t owner) {
    const Token name = expect_ident("assignment target");
    const auto fam = model_.find_family(name.text);
    if (!fam) {
      if (name.text.ends_with("_L") || name.text.ends_with("_R")) {
        fail(ParseErrorKind::ArityOrVisibility, name, "cannot assign a neighbor's variable '" + name.text + "'");
      }
      fail(ParseErrorKind::UnknownIdent, name, "unknown variable '" + name.text + "'");
    }
    VarId v = model_.family_base(*fam);
    if (model_.families[*fam].indexed) {
      v = VarId{v.index + owner};
      if (accept("[")) {
        const Token at = peek();
        const auto k = expect_int("index");
        expect("]");
        if (k != owner) fail(ParseErrorKind::ArityOrVisibility, at, "machine " + std::to_string(owner) + " cannot write " + name.text + "[" + std::to_string(k) + "]");
      }
    }
    if (model_.fixed[v.index]) fail(ParseErrorKind::ArityOrVisibility, name, model_.var_name(v) + " is fixed and cannot be assigned");
    return v;
  }

  void share_item() {
    const Token kw = next();
    body_started_ = true;
    const auto to = expect_int("target machine");
    expect_keyword("rules");
    expect_keyword("of");
    const auto from = expect_int("source machine");
    expect(";");
    try {
      share_rules(model_, from, to);
      for (auto it = model_.rules.rbegin(); it != model_.rules.rend() && it->owner == to && it->shared; ++it) {
        check_visible(it->guard, to, kw);
        for (const auto& u : it->updates) {
          if (model_.fixed[u.target.index]) fail(ParseErrorKind::ArityOrVisibility, kw, model_.var_name(u.target) + " is fixed and cannot be assigned");
          check_visible(u.value, to, kw);
        }
      }
    } catch (const ModelError& e) {
      fail(ParseErrorKind::ArityOrVisibility, kw, e.what());
    }
  }

  void check_visible(const Expr& e, std::uint32_t owner, const Token& at) const {
    if (e.kind() == ExprKind::Var && !model_.can_read(owner, e.var_id())) {
      fail(ParseErrorKind::ArityOrVisibility, at, "machine " + std::to_string(owner) + " cannot read " + model_.var_name(e.var_id()));
    }
    if (e.kind() == ExprKind::Choice) {
      for (const auto& d : model_.params[e.param().index].domain) check_visible(d, owner, at);
    }
    for (const auto& c : e.children()) check_visible(c, owner, at);
  }

  // expr := conj ("|" conj)*
  Expr expr(const Scope& scope) {
    Expr e = conj(scope);
    while (accept("|")) e = Expr::disjunction(e, conj(scope));
    return e;
  }

  Expr conj(const Scope& scope) {
    Expr e = cmp(scope);
    while (accept("&")) e = Expr::conjunction(e, cmp(scope));
    return e;
  }

  Expr cmp(const Scope& scope) {
    Expr lhs = unary(scope);
    if (accept("==")) return Expr::equality(lhs, unary(scope));
    if (accept("!=")) return Expr::negation(Expr::equality(lhs, unary(scope)));
    return lhs;
  }

  Expr unary(const Scope& scope) {
    if (accept("!")) return Expr::negation(unary(scope));
    return atom(scope);
  }

  Expr atom(const Scope& scope) {
    if (accept("(")) {
      Expr e = expr(scope);
      expect(")");
      return e;
    }
    if (is("?")) {
      const Token q = next();
      const Token name = expect_ident("choice parameter");
      if (!scope.allow_choice) fail(ParseErrorKind::ArityOrVisibility, name, "choice '?" + name.text + "' is only allowed inside rules");
      const auto p = model_.find_param(name.text);
      if (!p) fail(ParseErrorKind::UnknownIdent, name, "unknown choice parameter '" + name.text + "'");
      if (scope.owner) check_visible(Expr::choice(*p), *scope.owner, name);
      (void)q;
      return Expr::choice(*p);
    }
    if (peek().kind != Tok::Ident) fail(ParseErrorKind::Syntax, peek(), "expected an expression, found '" + describe(peek()) + "'");
    if (is_keyword("true")) {
      next();
      return Expr::constant(true);
    }
    if (is_keyword("false")) {
      next();
      return Expr::constant(false);
    }
    const Token name = expect_ident("identifier");
    if (const auto fam = model_.find_family(name.text)) {
      const auto& family = model_.families[*fam];
      if (family.indexed && is("[")) {
        next();
        const Token at = peek();
        const auto k = expect_int("index");
        if (k >= model_.machines) fail(ParseErrorKind::ArityOrVisibility, at, "index out of range");
        expect("]");
        const VarId v{model_.family_base(*fam).index + k};
        if (scope.owner && !model_.can_read(*scope.owner, v)) {
          fail(ParseErrorKind::ArityOrVisibility, name, "machine " + std::to_string(*scope.owner) + " cannot read " + model_.var_name(v));
        }
        return Expr::var(v);
      }
      if (!family.indexed) {
        if (is("[")) fail(ParseErrorKind::ArityOrVisibility, peek(), "'" + name.text + "' is not an array");
        return Expr::var(model_.family_base(*fam));
      }
      if (!scope.allow_local) fail(ParseErrorKind::ArityOrVisibility, name, "'" + name.text + "' needs an index outside rules");
      return Expr::local(*fam, Neighbor::Self);
    }
    if (name.text.size() > 2 && (name.text.ends_with("_L") || name.text.ends_with("_R"))) {
      const auto base = model_.find_family(name.text.substr(0, name.text.size() - 2));
      if (base && model_.families[*base].indexed) {
        if (!model_.ring) fail(ParseErrorKind::ArityOrVisibility, name, "neighbor reference '" + name.text + "' requires 'topology ring'");
        if (!scope.allow_local) fail(ParseErrorKind::ArityOrVisibility, name, "neighbor reference '" + name.text + "' outside rules");
        return Expr::local(*base, name.text.back() == 'L' ? Neighbor::Left : Neighbor::Right);
      }
    }
    if (model_.find_param(name.text)) {
      fail(ParseErrorKind::UnknownIdent, name, "'" + name.text + "' is a choice parameter; write '?" + name.text + "'");
    }
    fail(ParseErrorKind::UnknownIdent, name, "unknown identifier '" + name.text + "'");
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  TemplateModel model_;
  std::set<std::string, std::less<>> names_;
  std::set<std::string, std::less<>> rule_names_;
  bool seen_machines_ = false;
  bool seen_init_ = false;
  bool body_started_ = false;
};

// ---------------------------------------------------------------------------

enum Level { kOr = 1, kAnd = 2, kCmp = 3, kUnary = 4, kAtom = 5 };

void render(const TemplateModel& m, const Expr& e, int required, std::string& out) {
  auto wrap = [&](int level, auto&& body) {
    const bool parens = level < required;
    if (parens) out += '(';
    body();
    if (parens) out += ')';
  };
  switch (e.kind()) {
    case ExprKind::Const:
      out += e.const_value() ? "true" : "false";
      return;
    case ExprKind::Var:
      out += m.var_name(e.var_id());
      return;
    case ExprKind::Local: {
      out += m.families.at(e.family()).name;
      if (e.neighbor() == Neighbor::Left) out += "_L";
      if (e.neighbor() == Neighbor::Right) out += "_R";
      return;
    }
    case ExprKind::Choice:
      out += "?" + m.params.at(e.param().index).name;
      return;
    case ExprKind::Not: {
      const Expr& inner = e.children()[0];
      if (inner.kind() == ExprKind::Eq) {
        wrap(kCmp, [&] {
          render(m, inner.children()[0], kUnary, out);
          out += " != ";
          render(m, inner.children()[1], kUnary, out);
        });
        return;
      }
      wrap(kUnary, [&] {
        out += '!';
        render(m, inner, kUnary, out);
      });
      return;
    }
    case ExprKind::Eq:
      wrap(kCmp, [&] {
        render(m, e.children()[0], kUnary, out);
        out += " == ";
        render(m, e.children()[1], kUnary, out);
      });
      return;
    case ExprKind::And:
      wrap(kAnd, [&] {
        render(m, e.children()[0], kAnd, out);
        out += " & ";
        render(m, e.children()[1], kCmp, out);
      });
      return;
    case ExprKind::Or:
      wrap(kOr, [&] {
        render(m, e.children()[0], kOr, out);
        out += " | ";
        render(m, e.children()[1], kAnd, out);
      });
      return;
  }
}

std::string target_name(const TemplateModel& m, const Rule& r, VarId v) {
  const auto& info = m.vars[v.index];
  if (info.machine && *info.machine == r.owner) return m.families[info.family].name;
  return m.var_name(v);
}

std::string assignments(const TemplateModel& m, const Rule& r) {
  std::string out;
  for (std::size_t i = 0; i < r.updates.size(); ++i) {
    if (m.is_history(r.updates[i].target)) continue;
    if (!out.empty()) out += ", ";
    out += target_name(m, r, r.updates[i].target) + " := " + render_expr(m, r.updates[i].value);
  }
  return out;
}

}  // namespace

TemplateModel parse_model(std::string_view text) { return Parser(text).parse(); }

TemplateModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string render_expr(const TemplateModel& m, const Expr& e) {
  std::string out;
  render(m, e, kOr, out);
  return out;
}

std::string render_model(const TemplateModel& m) {
  for (const auto& f : m.families) {
    if (f.history) throw ModelError("history variable '" + f.name + "' has no textual form");
  }
  std::ostringstream out;
  out << "system " << m.name << " {\n";
  out << "  machines " << m.machines << ";\n";
  if (m.ring) out << "  topology ring;\n";
  for (const auto& f : m.families) {
    out << "  var " << f.name;
    if (f.indexed) out << "[" << m.machines << "]";
    out << " : bool;\n";
  }
  for (std::uint32_t v = 0; v < m.fixed.size(); ++v) {
    if (m.fixed[v]) out << "  fix " << m.var_name(VarId{v}) << " = " << (*m.fixed[v] ? "true" : "false") << ";\n";
  }
  for (const auto& p : m.params) {
    out << "  param " << p.name << " = { ";
    for (std::size_t i = 0; i < p.domain.size(); ++i) {
      if (i) out << ", ";
      out << render_expr(m, p.domain[i]);
    }
    out << " };\n";
  }
  out << "  init " << render_expr(m, m.init) << ";\n";
  std::optional<std::uint32_t> group;
  for (const auto& r : m.rules) {
    if (r.shared) {
      if (group != r.shared->group) {
        group = r.shared->group;
        out << "  share " << r.owner << " rules of " << m.rules.at(r.shared->source_rule).owner << ";\n";
      }
      continue;
    }
    group.reset();
    out << "  rule " << r.name << " owner " << r.owner << " : " << render_expr(m, r.guard) << " => "
        << assignments(m, r) << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string render_rule_listing(const TemplateModel& concrete) {
  std::ostringstream out;
  for (std::uint32_t machine = 0; machine < concrete.machines; ++machine) {
    for (const auto& r : concrete.rules) {
      if (r.owner != machine) continue;
      out << "R_" << machine << ": IF " << render_expr(concrete, r.guard) << " THEN " << assignments(concrete, r)
          << " ENDIF\n";
    }
  }
  return out.str();
}

std::string render_instantiation(const TemplateModel& m, const Instantiation& inst) {
  const TemplateModel concrete = instantiate(m, inst);
  std::ostringstream out;
  std::istringstream listing(render_rule_listing(concrete));
  for (std::string line; std::getline(listing, line);) out << "// " << line << "\n";
  out << render_model(concrete);
  return out.str();
}

}  // namespace bms
