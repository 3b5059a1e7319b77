#pragma once

// Structurally hashed Boolean circuit over numbered inputs. Edges carry a
// negation bit, so only AND and XOR nodes exist; constants fold on
// construction, which makes substitution of inputs double as partial
// evaluation.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace bms {

class Circuit {
 public:
  using Edge = std::uint32_t;  // (node << 1) | negated

  static constexpr Edge kFalse = 0;
  static constexpr Edge kTrue = 1;

  enum class NodeKind : std::uint8_t { Const, Input, And, Xor };

  Circuit();

  static constexpr Edge negate(Edge e) { return e ^ 1U; }
  static constexpr std::uint32_t node_of(Edge e) { return e >> 1; }
  static constexpr bool is_negated(Edge e) { return (e & 1U) != 0; }
  static constexpr bool is_const(Edge e) { return (e >> 1) == 0; }

  Edge add_input();
  std::size_t input_count() const { return inputs_.size(); }
  Edge input(std::size_t index) const { return inputs_.at(index) << 1; }

  Edge make_and(Edge a, Edge b);
  Edge make_and(std::span<const Edge> operands);
  Edge make_or(Edge a, Edge b) { return negate(make_and(negate(a), negate(b))); }
  Edge make_or(std::span<const Edge> operands);
  Edge make_xor(Edge a, Edge b);
  Edge make_eq(Edge a, Edge b) { return negate(make_xor(a, b)); }
  Edge make_implies(Edge a, Edge b) { return make_or(negate(a), b); }
  Edge make_ite(Edge c, Edge t, Edge e);
  Edge at_most_one(std::span<const Edge> operands);
  Edge exactly_one(std::span<const Edge> operands);

  std::size_t node_count() const { return nodes_.size(); }
  NodeKind kind(std::uint32_t node) const { return nodes_[node].kind; }
  std::span<const Edge> fanins(std::uint32_t node) const { return nodes_[node].fanins; }
  /// Input position of an Input node.
  std::uint32_t input_index(std::uint32_t node) const { return nodes_[node].input; }

  /// Evaluates `root` under a full input assignment.
  bool eval(Edge root, const std::vector<bool>& inputs) const;

  /// Nodes in the cone of `root`, in ascending (topological) order.
  std::vector<std::uint32_t> cone(Edge root) const;

 private:
  struct Node {
    NodeKind kind = NodeKind::Const;
    std::uint32_t input = 0;
    std::vector<Edge> fanins;
  };
  struct Key {
    NodeKind kind;
    std::vector<Edge> fanins;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  Edge intern(NodeKind kind, std::vector<Edge> fanins);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> inputs_;
  std::unordered_map<Key, std::uint32_t, KeyHash> table_;
};

/// Rebuilds the cone of `root` from `source` inside `target`, replacing source
/// input i by `input_map[i]` (an edge of `target`, possibly a constant).
Circuit::Edge copy_cone(const Circuit& source, Circuit::Edge root, Circuit& target,
                        std::span<const Circuit::Edge> input_map);

}  // namespace bms
