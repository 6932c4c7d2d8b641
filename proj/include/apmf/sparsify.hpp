#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "flow.hpp"
#include "graph.hpp"

namespace apmf {

// Sequence u_1..u_2l. tail[i]: both cycle arcs at u_i leave it (u_i in P_in),
// otherwise both enter it (P_out). arcs[i] joins u_i and u_{i+1}.
struct AntiDirectedCycle {
  std::vector<int> nodes;
  std::vector<char> tail;
  std::vector<FlowArc> arcs;

  std::vector<int> p_in() const { return pick(1); }
  std::vector<int> p_out() const { return pick(0); }

 private:
  std::vector<int> pick(char t) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (tail[i] == t) out.push_back(nodes[i]);
    return out;
  }
};

// Two copies of the support; link i joins tail copy of arcs[i].u to head copy of arcs[i].v.
struct BipartiteSupportGraph {
  std::vector<int> support;  // V(f), sorted
  std::vector<std::pair<int, int>> links;  // (index in V1, index in V2)
};

inline BipartiteSupportGraph bipartite_support(const FlowAssignment& f) {
  BipartiteSupportGraph b;
  b.support = f.support();
  auto idx = [&](int v) { return int(std::lower_bound(b.support.begin(), b.support.end(), v) - b.support.begin()); };
  for (auto& a : f.arcs)
    if (a.f > 0) b.links.emplace_back(idx(a.u), idx(a.v));
  return b;
}

namespace detail {

struct Dsu {
  std::vector<int> p;
  explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a), b = find(b);
    if (a == b) return false;
    p[a] = b;
    return true;
  }
};

}  // namespace detail

inline bool support_is_forest(const FlowAssignment& f) {
  auto b = bipartite_support(f);
  int k = (int)b.support.size();
  detail::Dsu d(2 * k);
  for (auto [x, y] : b.links)
    if (!d.unite(x, k + y)) return false;
  return true;
}

inline std::optional<std::string> cycle_violation(const FlowAssignment& f, const AntiDirectedCycle& c) {
  std::size_t L = c.nodes.size();
  if (L < 4 || L % 2) return "cycle length must be even and at least 4";
  if (c.tail.size() != L || c.arcs.size() != L) return "cycle arrays differ in length";
  std::map<std::pair<int, int>, cap_t> sup;
  for (auto& a : f.arcs)
    if (a.f > 0) sup[{a.u, a.v}] += a.f;
  std::map<std::pair<int, int>, int> seen_arc;
  std::map<std::pair<int, int>, int> seen_copy;
  for (std::size_t i = 0; i < L; ++i) {
    if (c.tail[i] == c.tail[(i + 1) % L]) return "consecutive edges form a directed path";
    int a = c.nodes[i], b = c.nodes[(i + 1) % L];
    auto want = c.tail[i] ? std::make_pair(a, b) : std::make_pair(b, a);
    if (std::make_pair(c.arcs[i].u, c.arcs[i].v) != want) return "arc orientation does not match the sequence";
    if (!sup.count(want)) return "arc not in the flow support";
    if (seen_arc[want]++) return "repeated arc";
    if (seen_copy[{c.nodes[i], c.tail[i]}]++) return "repeated node copy";
  }
  return std::nullopt;
}

// Spanning-forest sweep over G_{1,2} of the normalized flow; the first link
// closing a cycle gives it.
inline std::optional<AntiDirectedCycle> find_anti_directed_cycle(FlowAssignment f) {
  normalize(f);
  auto b = bipartite_support(f);
  int k = (int)b.support.size();
  detail::Dsu d(2 * k);
  std::vector<std::vector<std::pair<int, int>>> adj(2 * k);  // (neighbour copy, link id)
  for (int li = 0; li < (int)b.links.size(); ++li) {
    int x = b.links[li].first, y = k + b.links[li].second;
    if (d.unite(x, y)) {
      adj[x].push_back({y, li});
      adj[y].push_back({x, li});
      continue;
    }
    // forest path y -> x, then the closing link x -> y
    std::vector<int> via(2 * k, -2), prev(2 * k, -1);
    std::vector<int> q{y};
    via[y] = -1;
    for (std::size_t h = 0; h < q.size() && via[x] == -2; ++h)
      for (auto [z, l] : adj[q[h]])
        if (via[z] == -2) via[z] = l, prev[z] = q[h], q.push_back(z);
    std::vector<int> copies, links;
    for (int z = x; z != y; z = prev[z]) copies.push_back(z), links.push_back(via[z]);
    copies.push_back(y);
    std::reverse(copies.begin(), copies.end());
    std::reverse(links.begin(), links.end());
    links.push_back(li);  // from x back to y
    AntiDirectedCycle c;
    std::vector<int> arc_of;
    for (int i = 0; i < (int)f.arcs.size(); ++i)
      if (f.arcs[i].f > 0) arc_of.push_back(i);
    for (std::size_t i = 0; i < copies.size(); ++i) {
      int z = copies[i];
      c.nodes.push_back(b.support[z < k ? z : z - k]);
      c.tail.push_back(z < k);
      c.arcs.push_back(f.arcs[arc_of[links[i]]]);
    }
    return c;
  }
  return std::nullopt;
}

// Reroute f(e_min) around the cycle: arcs alternate -f(e_min), +f(e_min)
// starting at e_min. Per-node in/out totals are unchanged.
inline FlowAssignment eliminate_cycle(FlowAssignment f, const AntiDirectedCycle& c) {
  normalize(f);
  if (auto e = cycle_violation(f, c)) throw flow_error("cycle not in flow support: " + *e);
  std::map<std::pair<int, int>, int> id;
  for (int i = 0; i < (int)f.arcs.size(); ++i)
    if (f.arcs[i].f > 0 && !id.count({f.arcs[i].u, f.arcs[i].v})) id[{f.arcs[i].u, f.arcs[i].v}] = i;
  std::size_t L = c.arcs.size();
  std::vector<int> ai(L);
  for (std::size_t i = 0; i < L; ++i) ai[i] = id[{c.arcs[i].u, c.arcs[i].v}];
  std::size_t m = 0;
  for (std::size_t i = 1; i < L; ++i) {
    cap_t x = f.arcs[ai[i]].f, y = f.arcs[ai[m]].f;
    if (x < y || (x == y && ai[i] < ai[m])) m = i;
  }
  cap_t delta = f.arcs[ai[m]].f;
  for (std::size_t j = 0; j < L; ++j) {
    std::size_t i = (m + j) % L;
    f.arcs[ai[i]].f += (j % 2 == 0) ? -delta : delta;
  }
  std::erase_if(f.arcs, [](const FlowArc& a) { return a.f == 0; });
  return f;
}

struct SparsifyStats {
  int eliminations = 0;
  int volume_before = 0, volume_after = 0;
};

inline FlowAssignment sparsify(const FlowAssignment& f0, SparsifyStats* st = nullptr) {
  FlowAssignment f = remove_directed_cycles(f0);
  SparsifyStats s;
  s.volume_before = f0.volume();
  int bound = f.volume();
  while (auto c = find_anti_directed_cycle(f)) {
    int before = f.volume();
    f = eliminate_cycle(std::move(f), *c);
    if (f.volume() >= before) throw flow_error("elimination did not reduce volume");
    if (++s.eliminations > bound) throw flow_error("sparsify exceeded its elimination budget");
  }
  s.volume_after = f.volume();
  if (st) *st = s;
  return f;
}

// Feasibility-checked entry point for node-capacitated graphs.
inline FlowAssignment sparsify(const UndirectedGraph& g, const FlowAssignment& f, SparsifyStats* st = nullptr) {
  if (auto e = flow_violation(g, f)) throw flow_error("infeasible flow: " + *e);
  return sparsify(f, st);
}

// ---- flow text format (shared with certificates) ----
// `flow <s> <t>` header, then `a <u> <v> <val>` per support arc.

inline std::string serialize_flow(const FlowAssignment& f) {
  std::string out = "flow " + std::to_string(f.s) + " " + std::to_string(f.t) + "\n";
  for (auto& a : f.arcs)
    out += "a " + std::to_string(a.u) + " " + std::to_string(a.v) + " " + std::to_string(a.f) + "\n";
  return out;
}

inline FlowAssignment parse_flow(std::string_view text) {
  FlowAssignment f;
  bool header = false;
  detail::for_each_line(text, [&](int line, std::string_view raw) {
    auto tok = detail::split_ws(raw);
    if (tok.empty() || tok[0] == "c") return;
    auto fail = [&](const char* m) { throw flow_error("line " + std::to_string(line) + ": " + m); };
    std::int64_t x[3];
    if (tok[0] == "flow") {
      if (header) fail("duplicate header");
      if (tok.size() != 3 || !detail::parse_int(tok[1], x[0]) || !detail::parse_int(tok[2], x[1])) fail("malformed header");
      f.s = (int)x[0], f.t = (int)x[1];
      header = true;
    } else if (tok[0] == "a") {
      if (!header) fail("arc before header");
      if (tok.size() != 4) fail("malformed arc");
      for (int i = 0; i < 3; ++i)
        if (!detail::parse_int(tok[i + 1], x[i])) fail("malformed arc");
      if (x[0] < 0 || x[1] < 0 || x[0] > INT32_MAX || x[1] > INT32_MAX) fail("node id out of range");
      if (x[2] < 0) fail("negative flow");
      f.arcs.push_back({(int)x[0], (int)x[1], x[2]});
    } else {
      fail("unknown record");
    }
  });
  if (!header) throw flow_error("missing flow header");
  return f;
}

}  // namespace apmf
