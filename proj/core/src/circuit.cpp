#include "bms/circuit.hpp"

#include <algorithm>
#include <stdexcept>

namespace bms {

std::size_t Circuit::KeyHash::operator()(const Key& k) const {
  std::size_t h = static_cast<std::size_t>(k.kind) * 0x9e3779b97f4a7c15ULL;
  for (const auto e : k.fanins) h = (h ^ e) * 0x100000001b3ULL + (h >> 17);
  return h;
}

Circuit::Circuit() { nodes_.push_back(Node{}); }

Circuit::Edge Circuit::add_input() {
  const auto node = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{NodeKind::Input, static_cast<std::uint32_t>(inputs_.size()), {}});
  inputs_.push_back(node);
  return node << 1;
}

Circuit::Edge Circuit::intern(NodeKind kind, std::vector<Edge> fanins) {
  Key key{kind, std::move(fanins)};
  if (const auto it = table_.find(key); it != table_.end()) return it->second << 1;
  const auto node = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{kind, 0, key.fanins});
  table_.emplace(std::move(key), node);
  return node << 1;
}

Circuit::Edge Circuit::make_and(Edge a, Edge b) {
  const Edge ops[] = {a, b};
  return make_and(ops);
}

Circuit::Edge Circuit::make_and(std::span<const Edge> operands) {
  std::vector<Edge> ops;
  ops.reserve(operands.size());
  for (const auto e : operands) {
    if (e == kFalse) return kFalse;
    if (e == kTrue) continue;
    ops.push_back(e);
  }
  std::sort(ops.begin(), ops.end());
  ops.erase(std::unique(ops.begin(), ops.end()), ops.end());
  for (std::size_t i = 1; i < ops.size(); ++i) {
    if (ops[i] == negate(ops[i - 1])) return kFalse;  // x and !x are adjacent after sorting
  }
  if (ops.empty()) return kTrue;
  if (ops.size() == 1) return ops[0];
  return intern(NodeKind::And, std::move(ops));
}

Circuit::Edge Circuit::make_or(std::span<const Edge> operands) {
  std::vector<Edge> negated(operands.begin(), operands.end());
  for (auto& e : negated) e = negate(e);
  return negate(make_and(negated));
}

Circuit::Edge Circuit::make_xor(Edge a, Edge b) {
  bool flip = false;
  if (is_negated(a)) {
    a = negate(a);
    flip = !flip;
  }
  if (is_negated(b)) {
    b = negate(b);
    flip = !flip;
  }
  Edge result;
  if (a == kFalse) {
    result = b;
  } else if (b == kFalse) {
    result = a;
  } else if (a == b) {
    result = kFalse;
  } else {
    result = intern(NodeKind::Xor, {std::min(a, b), std::max(a, b)});
  }
  return flip ? negate(result) : result;
}

Circuit::Edge Circuit::make_ite(Edge c, Edge t, Edge e) {
  return make_or(make_and(c, t), make_and(negate(c), e));
}

Circuit::Edge Circuit::at_most_one(std::span<const Edge> operands) {
  std::vector<Edge> pairs;
  for (std::size_t i = 0; i < operands.size(); ++i) {
    for (std::size_t j = i + 1; j < operands.size(); ++j) pairs.push_back(negate(make_and(operands[i], operands[j])));
  }
  return make_and(pairs);
}

Circuit::Edge Circuit::exactly_one(std::span<const Edge> operands) {
  return make_and(at_most_one(operands), make_or(operands));
}

bool Circuit::eval(Edge root, const std::vector<bool>& inputs) const {
  if (inputs.size() < inputs_.size()) throw std::invalid_argument("circuit eval: missing inputs");
  const auto last = node_of(root);
  std::vector<char> value(last + 1, 0);
  auto edge_value = [&](Edge e) { return static_cast<bool>(value[node_of(e)]) != is_negated(e); };
  for (std::uint32_t n = 1; n <= last; ++n) {
    const auto& node = nodes_[n];
    switch (node.kind) {
      case NodeKind::Const:
        break;
      case NodeKind::Input:
        value[n] = inputs[node.input];
        break;
      case NodeKind::And: {
        bool v = true;
        for (const auto f : node.fanins) {
          if (!edge_value(f)) {
            v = false;
            break;
          }
        }
        value[n] = v;
        break;
      }
      case NodeKind::Xor:
        value[n] = edge_value(node.fanins[0]) != edge_value(node.fanins[1]);
        break;
    }
  }
  return edge_value(root);
}

std::vector<std::uint32_t> Circuit::cone(Edge root) const {
  std::vector<char> seen(node_of(root) + 1, 0);
  std::vector<std::uint32_t> stack{node_of(root)};
  seen[node_of(root)] = 1;
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    for (const auto f : nodes_[n].fanins) {
      if (!seen[node_of(f)]) {
        seen[node_of(f)] = 1;
        stack.push_back(node_of(f));
      }
    }
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t n = 0; n < seen.size(); ++n) {
    if (seen[n]) out.push_back(n);
  }
  return out;
}

Circuit::Edge copy_cone(const Circuit& source, Circuit::Edge root, Circuit& target,
                        std::span<const Circuit::Edge> input_map) {
  if (input_map.size() < source.input_count()) throw std::invalid_argument("copy_cone: input map too short");
  const auto order = source.cone(root);
  std::vector<Circuit::Edge> image(Circuit::node_of(root) + 1, Circuit::kFalse);
  auto map_edge = [&](Circuit::Edge e) {
    const auto img = image[Circuit::node_of(e)];
    return Circuit::is_negated(e) ? Circuit::negate(img) : img;
  };
  std::vector<Circuit::Edge> ops;
  for (const auto n : order) {
    switch (source.kind(n)) {
      case Circuit::NodeKind::Const:
        image[n] = Circuit::kFalse;
        break;
      case Circuit::NodeKind::Input:
        image[n] = input_map[source.input_index(n)];
        break;
      case Circuit::NodeKind::And:
        ops.clear();
        for (const auto f : source.fanins(n)) ops.push_back(map_edge(f));
        image[n] = target.make_and(ops);
        break;
      case Circuit::NodeKind::Xor:
        image[n] = target.make_xor(map_edge(source.fanins(n)[0]), map_edge(source.fanins(n)[1]));
        break;
    }
  }
  return map_edge(root);
}

}  // namespace bms
