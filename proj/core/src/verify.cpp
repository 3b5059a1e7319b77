#include "bms/verify.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace bms {

std::optional<std::uint32_t> StateGraph::find(State s) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), s);
  if (it == nodes.end() || *it != s) return std::nullopt;
  return static_cast<std::uint32_t>(it - nodes.begin());
}

std::vector<State> all_states(const TemplateModel& m) {
  std::vector<VarId> free;
  for (std::uint32_t v = 0; v < m.var_count(); ++v) {
    if (!m.fixed[v]) free.push_back(VarId{v});
  }
  if (free.size() > 24) throw ModelError("state space too large for explicit exploration");
  const State base = m.fixed_base();
  std::vector<State> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free.size()); ++mask) {
    State s = base;
    for (std::size_t i = 0; i < free.size(); ++i) s = s.with(free[i], (mask >> i) & 1U);
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<State> initial_states(const TemplateModel& m, const Instantiation& inst) {
  std::vector<State> out;
  for (const auto s : all_states(m)) {
    if (eval_expr(m, m.init, s, inst)) out.push_back(s);
  }
  return out;
}

}  // namespace

StateGraph build_state_graph(const TemplateModel& m, const Instantiation& inst, bool use_init) {
  std::set<State> seen;
  std::vector<State> frontier = use_init ? initial_states(m, inst) : all_states(m);
  const std::set<State> init(frontier.begin(), frontier.end());
  seen.insert(frontier.begin(), frontier.end());
  while (!frontier.empty()) {
    std::vector<State> next;
    for (const auto s : frontier) {
      for (const auto t : successors(m, inst, s)) {
        if (seen.insert(t).second) next.push_back(t);
      }
    }
    frontier = std::move(next);
  }
  StateGraph g;
  g.nodes.assign(seen.begin(), seen.end());
  for (const auto s : g.nodes) {
    std::vector<std::uint32_t> out;
    for (const auto t : successors(m, inst, s)) out.push_back(*g.find(t));
    g.succ.push_back(std::move(out));
    g.enabled.push_back(static_cast<std::uint32_t>(enabled_count(m, s, inst)));
    g.initial.push_back(init.contains(s));
  }
  return g;
}

std::vector<State> check_deadlock(const StateGraph& g) {
  std::vector<State> out;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.succ[i].empty()) out.push_back(g.nodes[i]);
  }
  return out;
}

namespace {

// Iterative Tarjan; returns the component id of every node.
std::vector<std::uint32_t> scc(const StateGraph& g, std::uint32_t& count) {
  const auto n = g.nodes.size();
  constexpr std::uint32_t kUnset = UINT32_MAX;
  std::vector<std::uint32_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<std::uint32_t> stack;
  std::vector<char> on_stack(n, 0);
  std::uint32_t next_index = 0;
  count = 0;
  struct Frame {
    std::uint32_t node;
    std::size_t edge;
  };
  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& f = call.back();
      if (f.edge < g.succ[f.node].size()) {
        const auto w = g.succ[f.node][f.edge++];
        if (index[w] == kUnset) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.node] = std::min(low[f.node], index[w]);
        }
        continue;
      }
      const auto v = f.node;
      if (low[v] == index[v]) {
        while (true) {
          const auto w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
          if (w == v) break;
        }
        ++count;
      }
      call.pop_back();
      if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
    }
  }
  return comp;
}

// Shortest path (as node list, both ends included) from any source to
// `target`, moving only through nodes accepted by `allowed`.
template <typename Allowed>
std::vector<std::uint32_t> bfs_path(const StateGraph& g, const std::vector<std::uint32_t>& sources, std::uint32_t target,
                                    Allowed allowed) {
  constexpr std::uint32_t kNone = UINT32_MAX;
  std::vector<std::uint32_t> parent(g.nodes.size(), kNone);
  std::vector<char> seen(g.nodes.size(), 0);
  std::deque<std::uint32_t> queue;
  for (const auto s : sources) {
    if (!seen[s]) {
      seen[s] = 1;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    if (v == target) {
      std::vector<std::uint32_t> path{v};
      for (auto p = parent[v]; p != kNone; p = parent[p]) path.push_back(p);
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (const auto w : g.succ[v]) {
      if (!seen[w] && allowed(w)) {
        seen[w] = 1;
        parent[w] = v;
        queue.push_back(w);
      }
    }
  }
  return {};
}

}  // namespace

std::optional<Lasso> check_afg(const StateGraph& g, const std::vector<bool>& phi) {
  const auto n = static_cast<std::uint32_t>(g.nodes.size());
  std::uint32_t count = 0;
  const auto comp = scc(g, count);
  std::vector<std::uint32_t> size(count, 0);
  for (const auto c : comp) ++size[c];
  std::vector<char> cyclic(count, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    // A node without successors repeats forever, so it is its own cycle.
    if (size[comp[v]] > 1 || g.succ[v].empty()) cyclic[comp[v]] = 1;
    for (const auto w : g.succ[v]) {
      if (w == v) cyclic[comp[v]] = 1;
    }
  }

  // Multi-source BFS distances from the initial nodes.
  constexpr std::uint32_t kInf = UINT32_MAX;
  std::vector<std::uint32_t> dist(n, kInf);
  std::deque<std::uint32_t> queue;
  std::vector<std::uint32_t> sources;
  for (std::uint32_t v = 0; v < n; ++v) {
    if (g.initial[v]) {
      dist[v] = 0;
      queue.push_back(v);
      sources.push_back(v);
    }
  }
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (const auto w : g.succ[v]) {
      if (dist[w] == kInf) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }

  std::optional<std::uint32_t> bad;
  for (std::uint32_t v = 0; v < n; ++v) {
    if (!phi[v] && cyclic[comp[v]] && dist[v] != kInf && (!bad || dist[v] < dist[*bad])) bad = v;
  }
  if (!bad) return std::nullopt;

  const auto v = *bad;
  const auto prefix = bfs_path(g, sources, v, [](std::uint32_t) { return true; });
  // Shortest cycle through v inside its component: BFS from v's successors back to v.
  std::vector<std::uint32_t> starts;
  for (const auto w : g.succ[v]) {
    if (comp[w] == comp[v]) starts.push_back(w);
  }
  std::vector<std::uint32_t> back;
  if (g.succ[v].empty() || std::find(starts.begin(), starts.end(), v) != starts.end()) {
    back = {v};
  } else {
    back = bfs_path(g, starts, v, [&](std::uint32_t w) { return comp[w] == comp[v]; });
  }
  Lasso lasso;
  for (std::size_t i = 0; i + 1 < prefix.size(); ++i) lasso.prefix.push_back(g.nodes[prefix[i]]);
  lasso.cycle.push_back(g.nodes[v]);
  for (std::size_t i = 0; i + 1 < back.size(); ++i) lasso.cycle.push_back(g.nodes[back[i]]);
  return lasso;
}

std::optional<Lasso> check_afg(const TemplateModel& m, const Instantiation& inst, const Predicate& p) {
  const auto pm = prepare(m, p);
  const auto g = build_state_graph(pm.model, inst, true);
  std::vector<bool> phi;
  for (const auto s : g.nodes) phi.push_back(predicate_holds(pm, p, inst, s));
  return check_afg(g, phi);
}

const char* to_string(BoundedVerdict v) {
  switch (v) {
    case BoundedVerdict::Valid:
      return "valid";
    case BoundedVerdict::PropertyFailure:
      return "property_failure";
    case BoundedVerdict::DeadEnd:
      return "dead_end";
  }
  return "?";
}

BoundedResult check_bounded(const TemplateModel& m, const Instantiation& inst, const PropertyMode& prop) {
  const auto pm = prepare(m, prop.predicate);
  std::vector<std::map<State, State>> parents;
  std::vector<State> layer = initial_states(pm.model, inst);
  auto trace_to = [&](State s, std::uint32_t depth) {
    std::vector<State> out{s};
    for (std::uint32_t j = depth; j > 0; --j) {
      s = parents[j - 1].at(s);
      out.push_back(s);
    }
    std::reverse(out.begin(), out.end());
    return out;
  };
  for (std::uint32_t j = 0; j <= prop.to; ++j) {
    std::map<State, State> next_parent;
    for (const auto s : layer) {
      if (j >= prop.from && !predicate_holds(pm, prop.predicate, inst, s)) {
        return {BoundedVerdict::PropertyFailure, trace_to(s, j)};
      }
      if (j == prop.to) continue;
      const auto succ = successors(pm.model, inst, s);
      if (succ.empty()) return {BoundedVerdict::DeadEnd, trace_to(s, j)};
      for (const auto t : succ) next_parent.emplace(t, s);
    }
    if (j == prop.to) break;
    layer.clear();
    for (const auto& [t, s] : next_parent) layer.push_back(t);
    parents.push_back(std::move(next_parent));
  }
  return {};
}

std::optional<std::pair<State, State>> check_closure(const TemplateModel& m, const Instantiation& inst, const Predicate& p) {
  const auto pm = prepare(m, p);
  for (const auto s : all_states(pm.model)) {
    if (!predicate_holds(pm, p, inst, s)) continue;
    for (const auto t : successors(pm.model, inst, s)) {
      if (!predicate_holds(pm, p, inst, t)) return std::pair{s, t};
    }
  }
  return std::nullopt;
}

std::optional<Lasso> check_fair(const TemplateModel& m, const Instantiation& inst) {
  return check_afg(m, inst, Predicate::legitimate_and_moved());
}

bool lasso_replays(const TemplateModel& m, const Instantiation& inst, const Lasso& lasso) {
  if (lasso.cycle.empty()) return false;
  std::vector<State> path = lasso.prefix;
  path.insert(path.end(), lasso.cycle.begin(), lasso.cycle.end());
  path.push_back(lasso.cycle.front());
  if (!eval_expr(m, m.init, path.front(), inst) || !m.fixed_consistent(path.front())) return false;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto succ = successors(m, inst, path[i]);
    if (succ.empty() && path[i + 1] == path[i]) continue;
    if (!std::binary_search(succ.begin(), succ.end(), path[i + 1])) return false;
  }
  return true;
}

bool VerifyReport::all_pass() const {
  if (!deadlocks.empty() || afg || closure || fairness) return false;
  return std::all_of(bounded.begin(), bounded.end(),
                     [](const auto& b) { return b.second.verdict == BoundedVerdict::Valid; });
}

VerifyReport verify_all(const TemplateModel& m, const Instantiation& inst, const std::vector<PropertyMode>& bounded) {
  VerifyReport r;
  const auto g = build_state_graph(m, inst, true);
  r.states = g.nodes.size();
  r.deadlocks = check_deadlock(g);
  for (const auto& prop : bounded) r.bounded.emplace_back(prop, check_bounded(m, inst, prop));
  r.afg = check_afg(m, inst, Predicate::legitimate());
  r.closure = check_closure(m, inst, Predicate::legitimate());
  r.fairness = check_fair(m, inst);
  return r;
}

}  // namespace bms
