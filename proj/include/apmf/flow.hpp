#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "graph.hpp"

namespace apmf {

struct flow_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FlowArc {
  int u, v;
  cap_t f;
  bool operator==(const FlowArc&) const = default;
};

// s-t flow given by its positive arcs. Node ids are those of the host graph.
struct FlowAssignment {
  int s = -1, t = -1;
  std::vector<FlowArc> arcs;

  cap_t value() const {
    cap_t v = 0;
    for (auto& a : arcs) {
      if (a.u == s) v += a.f;
      if (a.v == s) v -= a.f;
    }
    return v;
  }
  int volume() const {
    return (int)std::count_if(arcs.begin(), arcs.end(), [](const FlowArc& a) { return a.f > 0; });
  }
  std::vector<int> support() const {
    std::vector<int> out;
    for (auto& a : arcs)
      if (a.f > 0) out.push_back(a.u), out.push_back(a.v);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

// Sort, merge parallel arcs, cancel antiparallel pairs and drop zeros.
inline void normalize(FlowAssignment& f) {
  std::map<std::pair<int, int>, cap_t> net;
  for (auto& a : f.arcs) {
    if (a.f < 0) throw flow_error("negative arc flow");
    if (a.u == a.v) continue;
    if (a.u < a.v) net[{a.u, a.v}] += a.f;
    else net[{a.v, a.u}] -= a.f;
  }
  f.arcs.clear();
  for (auto [k, x] : net) {
    if (x > 0) f.arcs.push_back({k.first, k.second, x});
    if (x < 0) f.arcs.push_back({k.second, k.first, -x});
  }
  std::sort(f.arcs.begin(), f.arcs.end(), [](const FlowArc& a, const FlowArc& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
}

// Net balance (out - in) per node, over the ids that appear.
inline std::unordered_map<int, cap_t> balances(const FlowAssignment& f) {
  std::unordered_map<int, cap_t> b;
  for (auto& a : f.arcs) b[a.u] += a.f, b[a.v] -= a.f;
  return b;
}

inline std::optional<std::string> conservation_violation(const FlowAssignment& f) {
  for (auto [v, bal] : balances(f))
    if (v != f.s && v != f.t && bal != 0) return "conservation violated at node " + std::to_string(v);
  return std::nullopt;
}

// Flow feasibility on a node-capacitated undirected graph: arcs must be edges,
// internal through-flow must respect c(v). The endpoints are not capped.
inline std::optional<std::string> flow_violation(const UndirectedGraph& g, const FlowAssignment& f) {
  if (f.s < 0 || f.s >= g.n() || f.t < 0 || f.t >= g.n() || f.s == f.t) return "bad endpoints";
  std::unordered_map<int, cap_t> in;
  for (auto& a : f.arcs) {
    if (a.u < 0 || a.v < 0 || a.u >= g.n() || a.v >= g.n()) return "arc endpoint out of range";
    if (a.f < 0) return "negative flow";
    if (a.f > 0 && !g.adjacent(a.u, a.v))
      return "arc " + std::to_string(a.u) + "->" + std::to_string(a.v) + " is not an edge";
    in[a.v] += a.f;
  }
  if (auto e = conservation_violation(f)) return e;
  for (auto [v, x] : in)
    if (v != f.s && v != f.t && x > g.capacity(v))
      return "node " + std::to_string(v) + " carries " + std::to_string(x) + " > capacity " +
             std::to_string(g.capacity(v));
  return std::nullopt;
}

namespace detail {

// Adjacency over positive arcs, keyed by local index.
struct ArcIndex {
  std::unordered_map<int, std::vector<int>> out;
  explicit ArcIndex(const FlowAssignment& f) {
    for (int i = 0; i < (int)f.arcs.size(); ++i)
      if (f.arcs[i].f > 0) out[f.arcs[i].u].push_back(i);
  }
};

// Some directed cycle of positive arcs (arc indices), or empty.
inline std::vector<int> find_cycle(const FlowAssignment& f) {
  ArcIndex idx(f);
  std::unordered_map<int, int> color;  // 0 white, 1 on stack, 2 done
  std::unordered_map<int, int> via;    // arc used to enter node
  for (auto& [root, _] : idx.out) {
    if (color[root]) continue;
    std::vector<std::pair<int, std::size_t>> st{{root, 0}};
    color[root] = 1;
    while (!st.empty()) {
      auto& [v, k] = st.back();
      auto it = idx.out.find(v);
      if (it == idx.out.end() || k == it->second.size()) {
        color[v] = 2;
        st.pop_back();
        continue;
      }
      int ai = it->second[k++];
      if (f.arcs[ai].f <= 0) continue;
      int w = f.arcs[ai].v;
      int cw = color[w];
      if (cw == 1) {
        std::vector<int> cyc{ai};
        for (int x = v; x != w; x = f.arcs[via[x]].u) cyc.push_back(via[x]);
        std::reverse(cyc.begin(), cyc.end());
        return cyc;
      }
      if (cw == 0) {
        color[w] = 1;
        via[w] = ai;
        st.push_back({w, 0});
      }
    }
  }
  return {};
}

}  // namespace detail

inline bool is_acyclic(const FlowAssignment& f) { return detail::find_cycle(f).empty(); }

inline FlowAssignment remove_directed_cycles(FlowAssignment f) {
  if (auto e = conservation_violation(f)) throw flow_error(*e);
  normalize(f);
  for (;;) {
    auto cyc = detail::find_cycle(f);
    if (cyc.empty()) break;
    cap_t m = f.arcs[cyc[0]].f;
    for (int i : cyc) m = std::min(m, f.arcs[i].f);
    for (int i : cyc) f.arcs[i].f -= m;
    std::erase_if(f.arcs, [](const FlowArc& a) { return a.f == 0; });
  }
  return f;
}

struct FlowPath {
  std::vector<int> nodes;
  cap_t amount;
};

inline std::vector<FlowPath> path_decompose(const FlowAssignment& f0) {
  if (auto e = conservation_violation(f0)) throw flow_error(*e);
  FlowAssignment f = f0;
  normalize(f);
  if (!is_acyclic(f)) throw flow_error("flow has a directed cycle");
  std::unordered_map<int, std::vector<int>> out;
  for (int i = 0; i < (int)f.arcs.size(); ++i) out[f.arcs[i].u].push_back(i);
  std::unordered_map<int, std::size_t> ptr;
  std::vector<FlowPath> paths;
  for (;;) {
    std::vector<int> arcs;
    int v = f.s;
    while (v != f.t) {
      auto it = out.find(v);
      std::size_t& k = ptr[v];
      while (it != out.end() && k < it->second.size() && f.arcs[it->second[k]].f == 0) ++k;
      if (it == out.end() || k == it->second.size()) break;
      int ai = it->second[k];
      arcs.push_back(ai);
      v = f.arcs[ai].v;
    }
    if (v != f.t) {
      if (!arcs.empty()) throw flow_error("flow path stalls before the sink");
      break;
    }
    cap_t m = f.arcs[arcs[0]].f;
    for (int i : arcs) m = std::min(m, f.arcs[i].f);
    FlowPath p{{f.s}, m};
    for (int i : arcs) f.arcs[i].f -= m, p.nodes.push_back(f.arcs[i].v);
    paths.push_back(std::move(p));
  }
  for (auto& a : f.arcs)
    if (a.f != 0) throw flow_error("flow not decomposable into s-t paths");
  return paths;
}

}  // namespace apmf
