#pragma once

#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "flow.hpp"
#include "graph.hpp"
#include "nodeset.hpp"

namespace apmf {

// Level-graph augmenting max-flow on an explicit arc list.
// Arc 2k is the k-th added arc, 2k+1 its residual twin.
class Dinic {
 public:
  static constexpr cap_t inf = std::numeric_limits<cap_t>::max() / 4;

  explicit Dinic(int n = 0) : n_(n) {}

  int add_arc(int u, int v, cap_t c) {
    int id = (int)to_.size();
    from_.push_back(u), to_.push_back(v), cap_.push_back(c);
    from_.push_back(v), to_.push_back(u), cap_.push_back(0);
    built_ = false;
    return id;
  }

  int node_count() const { return n_; }
  int arc_count() const { return (int)to_.size(); }
  int from(int a) const { return from_[a]; }
  int to(int a) const { return to_[a]; }
  cap_t capacity(int a) const { return cap_[a]; }
  cap_t residual(int a) const { return res_[a]; }
  cap_t flow(int a) const { return cap_[a] - res_[a]; }

  // per-query override; reset() restores
  void block(int a) { res_[a] = 0, res_[a ^ 1] = 0; }

  void reset() {
    if (!built_) build();
    res_ = cap_;
  }

  cap_t run(int s, int t) {
    if (!built_) reset();
    cap_t total = 0;
    std::vector<int> it(n_), path;
    while (bfs(s, t)) {
      for (int v = 0; v < n_; ++v) it[v] = off_[v];
      path.clear();
      int v = s;
      for (;;) {
        if (v == t) {
          cap_t b = inf;
          for (int a : path) b = std::min(b, res_[a]);
          std::size_t cut = path.size();
          for (std::size_t i = 0; i < path.size(); ++i) {
            res_[path[i]] -= b, res_[path[i] ^ 1] += b;
            if (res_[path[i]] == 0 && cut == path.size()) cut = i;
          }
          total += b;
          path.resize(cut);
          v = path.empty() ? s : to_[path.back()];
          continue;
        }
        bool moved = false;
        for (int& k = it[v]; k < off_[v + 1]; ++k) {
          int a = order_[k];
          if (res_[a] > 0 && level_[to_[a]] == level_[v] + 1) {
            path.push_back(a);
            v = to_[a];
            moved = true;
            break;
          }
        }
        if (moved) continue;
        level_[v] = -1;
        if (path.empty()) break;
        v = from_[path.back()];
        path.pop_back();
        ++it[v];
      }
    }
    return total;
  }

  std::vector<char> reachable(int s) const {
    std::vector<char> seen(n_, 0);
    std::vector<int> st{s};
    seen[s] = 1;
    while (!st.empty()) {
      int v = st.back();
      st.pop_back();
      for (int k = off_[v]; k < off_[v + 1]; ++k) {
        int a = order_[k];
        if (res_[a] > 0 && !seen[to_[a]]) seen[to_[a]] = 1, st.push_back(to_[a]);
      }
    }
    return seen;
  }

 private:
  void build() {
    off_.assign(n_ + 1, 0);
    for (int u : from_) ++off_[u + 1];
    for (int v = 0; v < n_; ++v) off_[v + 1] += off_[v];
    order_.assign(from_.size(), 0);
    std::vector<int> pos(off_.begin(), off_.end() - 1);
    for (int a = 0; a < (int)from_.size(); ++a) order_[pos[from_[a]]++] = a;
    level_.assign(n_, -1);
    built_ = true;
  }

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<int> q{s};
    level_[s] = 0;
    for (std::size_t h = 0; h < q.size(); ++h) {
      int v = q[h];
      for (int k = off_[v]; k < off_[v + 1]; ++k) {
        int a = order_[k];
        if (res_[a] > 0 && level_[to_[a]] < 0) level_[to_[a]] = level_[v] + 1, q.push_back(to_[a]);
      }
    }
    return level_[t] >= 0;
  }

  int n_;
  bool built_ = false;
  std::vector<int> from_, to_, off_, order_, level_;
  std::vector<cap_t> cap_, res_;
};

struct VertexCut {
  int s = -1, t = -1;
  NodeSet side_s, separator, side_t;
  cap_t capacity = 0;
  bool operator==(const VertexCut&) const = default;
};

struct MaxFlowResult {
  cap_t value = 0;
  VertexCut cut;
  FlowAssignment flow;
  int adjacency_bonus = 0;
};

// Checks partition, endpoints, capacity sum and the edge scan. The edge {s,t}
// itself is exempt when present.
inline std::optional<std::string> cut_violation(const UndirectedGraph& g, const VertexCut& c) {
  int n = g.n();
  if (c.side_s.universe() != n || c.separator.universe() != n || c.side_t.universe() != n) return "wrong universe";
  if (c.s < 0 || c.s >= n || c.t < 0 || c.t >= n || c.s == c.t) return "bad endpoints";
  if (!c.side_s.test(c.s)) return "s not in S";
  if (!c.side_t.test(c.t)) return "t not in T";
  cap_t sum = 0;
  for (int v = 0; v < n; ++v) {
    int k = c.side_s.test(v) + c.separator.test(v) + c.side_t.test(v);
    if (k != 1) return "node " + std::to_string(v) + " not in exactly one part";
    if (c.separator.test(v)) sum += g.capacity(v);
  }
  if (sum != c.capacity) return "capacity mismatch";
  for (auto [u, v] : g.edges()) {
    if ((u == c.s && v == c.t) || (u == c.t && v == c.s)) continue;
    if ((c.side_s.test(u) && c.side_t.test(v)) || (c.side_t.test(u) && c.side_s.test(v)))
      return "edge " + std::to_string(u) + "-" + std::to_string(v) + " crosses S-T";
  }
  return std::nullopt;
}

// Reusable solver on the split network of one graph.
class VertexFlowSolver {
 public:
  explicit VertexFlowSolver(const UndirectedGraph& g) : g_(&g), d_(2 * g.n()) {
    for (int v = 0; v < g.n(); ++v) d_.add_arc(in_node(v), out_node(v), g.capacity(v));
    for (int e = 0; e < g.m(); ++e) {
      auto [u, v] = g.edges()[e];
      cap_t c = g.capacity(u) + g.capacity(v);
      d_.add_arc(out_node(u), in_node(v), c);
      d_.add_arc(out_node(v), in_node(u), c);
      edge_id_[key(u, v)] = e;
    }
  }

  const UndirectedGraph& graph() const { return *g_; }

  MaxFlowResult solve(int s, int t, bool want_flow = true) {
    const UndirectedGraph& g = *g_;
    if (s < 0 || t < 0 || s >= g.n() || t >= g.n()) throw graph_error("node id out of range");
    if (s == t) throw graph_error("source equals sink");
    d_.reset();
    MaxFlowResult r;
    int direct = -1;
    auto it = edge_id_.find(key(s, t));
    if (it != edge_id_.end()) {
      direct = it->second;
      int a = 2 * (g.n() + 2 * it->second);
      d_.block(a), d_.block(a + 2);
      r.adjacency_bonus = 1;
    }
    cap_t f = d_.run(out_node(s), in_node(t));
    auto reach = d_.reachable(out_node(s));
    VertexCut& c = r.cut;
    c.s = s, c.t = t;
    c.side_s = NodeSet(g.n()), c.separator = NodeSet(g.n()), c.side_t = NodeSet(g.n());
    for (int x = 0; x < g.n(); ++x) {
      bool ri = reach[in_node(x)], ro = reach[out_node(x)];
      if (x == s || ro) c.side_s.set(x);
      else if (ri) c.separator.set(x), c.capacity += g.capacity(x);
      else c.side_t.set(x);
    }
    r.value = f + r.adjacency_bonus;
    if (want_flow) {
      r.flow.s = s, r.flow.t = t;
      for (int e = 0; e < g.m(); ++e) {
        if (e == direct) continue;
        auto [u, v] = g.edges()[e];
        int a = 2 * (g.n() + 2 * e);
        cap_t fw = d_.flow(a), bw = d_.flow(a + 2);
        if (fw > bw) r.flow.arcs.push_back({u, v, fw - bw});
        else if (bw > fw) r.flow.arcs.push_back({v, u, bw - fw});
      }
      r.flow = remove_directed_cycles(std::move(r.flow));
    }
#ifdef APMF_CHECK_CUTS
    if (auto e = cut_violation(g, c)) throw flow_error("solver produced invalid cut: " + *e);
    if (c.capacity != f) throw flow_error("cut capacity differs from flow value");
#endif
    return r;
  }

 private:
  static std::uint64_t key(int u, int v) {
    if (u > v) std::swap(u, v);
    return (std::uint64_t)u << 32 | (std::uint32_t)v;
  }

  const UndirectedGraph* g_;
  Dinic d_;
  std::unordered_map<std::uint64_t, int> edge_id_;
};

inline MaxFlowResult max_flow(const UndirectedGraph& g, int s, int t) {
  VertexFlowSolver solver(g);
  return solver.solve(s, t);
}

// Plain arc max-flow on a directed network.
inline cap_t network_max_flow(const DirectedNetwork& net, int s, int t) {
  Dinic d(net.n);
  for (auto& a : net.arcs) d.add_arc(a.from, a.to, a.cap);
  return d.run(s, t);
}

}  // namespace apmf
