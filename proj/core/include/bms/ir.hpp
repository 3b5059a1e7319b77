#pragma once

// Intermediate representation of template transition systems: machines owning
// Boolean state variables, guarded rules whose guards and updates may contain
// choice holes, and the interleaving execution semantics over them.

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bms {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a choice hole is evaluated without a selected domain entry.
class UnboundChoice : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PartialInstantiation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VarId {
  std::uint32_t index = 0;
  friend auto operator<=>(const VarId&, const VarId&) = default;
};

struct ParamId {
  std::uint32_t index = 0;
  friend auto operator<=>(const ParamId&, const ParamId&) = default;
};

/// Owner-relative position of a machine in a ring.
enum class Neighbor : std::int8_t { Left = -1, Self = 0, Right = 1 };

enum class ExprKind : std::uint8_t {
  Const,
  Var,    // absolute variable reference
  Local,  // variable family element relative to the evaluating machine
  Not,
  And,
  Or,
  Eq,
  Choice,
};

/// Immutable expression DAG node handle. Copies share structure.
class Expr {
 public:
  Expr();  // constant false

  static Expr constant(bool value);
  static Expr var(VarId id);
  static Expr local(std::uint32_t family, Neighbor where);
  static Expr choice(ParamId id);
  static Expr negation(Expr operand);
  static Expr conjunction(Expr lhs, Expr rhs);
  static Expr disjunction(Expr lhs, Expr rhs);
  static Expr equality(Expr lhs, Expr rhs);

  ExprKind kind() const;
  bool const_value() const;
  VarId var_id() const;
  std::uint32_t family() const;
  Neighbor neighbor() const;
  ParamId param() const;
  std::span<const Expr> children() const;

  bool contains_choice() const;

  friend bool operator==(const Expr& lhs, const Expr& rhs);

 private:
  struct Node;
  static std::shared_ptr<const Node> const_node(bool value);
  explicit Expr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

inline Expr operator!(Expr e) { return Expr::negation(std::move(e)); }
inline Expr operator&&(Expr a, Expr b) { return Expr::conjunction(std::move(a), std::move(b)); }
inline Expr operator||(Expr a, Expr b) { return Expr::disjunction(std::move(a), std::move(b)); }

/// A named group of Boolean variables: either one scalar shared by all
/// machines, or an array with one element owned by each machine.
struct VarFamily {
  std::string name;
  bool indexed = false;
  // History variables are bookkeeping only: they never make a rule enabled.
  bool history = false;

  friend bool operator==(const VarFamily&, const VarFamily&) = default;
};

struct VarInfo {
  std::uint32_t family = 0;
  std::optional<std::uint32_t> machine;  // owner; nullopt for scalars

  friend bool operator==(const VarInfo&, const VarInfo&) = default;
};

struct ChoiceParam {
  std::string name;
  std::vector<Expr> domain;

  friend bool operator==(const ChoiceParam&, const ChoiceParam&) = default;
};

struct Update {
  VarId target;
  Expr value;

  friend bool operator==(const Update&, const Update&) = default;
};

/// Records that a rule is a copy made by a `share j rules of i` item.
struct ShareOrigin {
  std::uint32_t group = 0;
  std::uint32_t source_rule = 0;

  friend bool operator==(const ShareOrigin&, const ShareOrigin&) = default;
};

struct Rule {
  std::string name;
  std::uint32_t owner = 0;
  Expr guard;
  std::vector<Update> updates;
  std::optional<ShareOrigin> shared;

  friend bool operator==(const Rule&, const Rule&) = default;
};

/// Total valuation of the model's state variables (at most 64 of them).
class State {
 public:
  State() = default;
  explicit State(std::uint64_t bits) : bits_(bits) {}

  bool get(VarId v) const { return (bits_ >> v.index) & 1U; }
  State with(VarId v, bool value) const {
    const std::uint64_t mask = std::uint64_t{1} << v.index;
    return State(value ? (bits_ | mask) : (bits_ & ~mask));
  }
  std::uint64_t bits() const { return bits_; }

  friend auto operator<=>(const State&, const State&) = default;

 private:
  std::uint64_t bits_ = 0;
};

inline constexpr std::size_t kMaxStateVars = 64;

struct Instantiation {
  std::vector<std::uint32_t> choice;  // indexed by ParamId

  friend bool operator==(const Instantiation&, const Instantiation&) = default;
};

struct TemplateModel {
  std::string name = "model";
  std::uint32_t machines = 1;
  bool ring = false;
  std::vector<VarFamily> families;
  std::vector<VarInfo> vars;
  std::vector<ChoiceParam> params;
  std::vector<Rule> rules;
  std::vector<std::optional<bool>> fixed;  // indexed by VarId
  Expr init = Expr::constant(true);

  friend bool operator==(const TemplateModel&, const TemplateModel&) = default;

  std::size_t var_count() const { return vars.size(); }
  std::string var_name(VarId v) const;
  std::optional<VarId> find_var(std::string_view name) const;
  std::optional<std::uint32_t> find_family(std::string_view name) const;
  std::optional<ParamId> find_param(std::string_view name) const;
  /// First VarId of a family; indexed families occupy `machines` consecutive ids.
  VarId family_base(std::uint32_t family) const;
  VarId resolve_local(std::uint32_t family, Neighbor where, std::uint32_t owner) const;
  bool is_history(VarId v) const { return families[vars[v.index].family].history; }
  bool can_read(std::uint32_t machine, VarId v) const;
  bool can_write(std::uint32_t machine, VarId v) const;
  std::vector<VarId> owned_vars(std::uint32_t machine) const;
  std::vector<VarId> readable_vars(std::uint32_t machine) const;
  /// State with every fixed variable at its value and all others false.
  State fixed_base() const;
  bool fixed_consistent(State s) const;
};

/// Appends a variable family; returns the VarId of its first element.
VarId add_family(TemplateModel& m, std::string name, bool indexed, bool history = false);

/// Appends copies of every rule currently owned by `from`, re-owned by `to`
/// (one share group). Owner-relative references are reinterpreted for `to`;
/// update targets move to the corresponding element of `to`.
void share_rules(TemplateModel& m, std::uint32_t from, std::uint32_t to);

/// Checks every structural invariant; throws ModelError on the first failure.
void validate(const TemplateModel& m);

/// Evaluates `e`. Owner-relative references resolve against `owner`; choice
/// holes take the domain entry selected by `inst` and are evaluated with the
/// same owner.
bool eval_expr(const TemplateModel& m, const Expr& e, State s, const Instantiation& inst,
               std::optional<std::uint32_t> owner = std::nullopt);

/// Fires the rule's move with simultaneous assignment semantics.
State apply_rule(const TemplateModel& m, const Rule& r, State s, const Instantiation& inst);

/// True iff the guard holds and the move changes some non-history variable.
bool rule_enabled(const TemplateModel& m, const Rule& r, State s, const Instantiation& inst);

std::size_t enabled_count(const TemplateModel& m, State s, const Instantiation& inst);

/// One successor per enabled rule, deduplicated and sorted.
std::vector<State> successors(const TemplateModel& m, const Instantiation& inst, State s);

/// Exactly one rule (counted by position) is enabled.
bool legitimate(const TemplateModel& m, const Instantiation& inst, State s);

/// Replaces each choice hole with its selected domain expression.
TemplateModel instantiate(const TemplateModel& m, const Instantiation& inst);

/// Replaces owner-relative references with absolute ones.
Expr resolve_locals(const TemplateModel& m, const Expr& e, std::uint32_t owner);

struct AugmentedModel {
  TemplateModel model;
  Expr all_moved;  // conjunction of the per-machine history bits
};

/// Adds a history bit per machine, cleared initially and set by every rule of
/// that machine.
AugmentedModel augment_moved(const TemplateModel& m);

/// Number of instantiations, or nullopt when it exceeds 2^64 - 1.
std::optional<std::uint64_t> instantiation_count(const TemplateModel& m);

/// The instantiation with the given lexicographic rank (first param most
/// significant).
Instantiation instantiation_at(const TemplateModel& m, std::uint64_t rank);

/// Lexicographic range over all instantiations.
class InstantiationRange {
 public:
  class iterator {
   public:
    using value_type = Instantiation;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    const Instantiation& operator*() const { return current_; }
    const Instantiation* operator->() const { return &current_; }
    iterator& operator++();
    iterator operator++(int) {
      auto copy = *this;
      ++*this;
      return copy;
    }
    friend bool operator==(const iterator& a, const iterator& b) { return a.done_ == b.done_ && (a.done_ || a.current_ == b.current_); }

   private:
    friend class InstantiationRange;
    std::vector<std::uint32_t> sizes_;
    Instantiation current_;
    bool done_ = true;
  };

  explicit InstantiationRange(const TemplateModel& m);
  iterator begin() const { return begin_; }
  iterator end() const { return {}; }

 private:
  iterator begin_;
};

InstantiationRange enumerate_instantiations(const TemplateModel& m);

}  // namespace bms
