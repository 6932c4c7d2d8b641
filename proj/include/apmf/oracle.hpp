#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "graph.hpp"
#include "maxflow.hpp"

namespace apmf {

struct oracle_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AllPairsTable {
  static constexpr cap_t none = -1;
  int n = 0;
  std::vector<cap_t> v;
  std::int64_t calls = 0;

  cap_t operator()(int a, int b) const { return v[(std::size_t)a * n + b]; }
  cap_t& at(int a, int b) { return v[(std::size_t)a * n + b]; }
};

inline AllPairsTable naive_all_pairs(const UndirectedGraph& g) {
  AllPairsTable t{g.n(), std::vector<cap_t>((std::size_t)g.n() * g.n(), AllPairsTable::none)};
  VertexFlowSolver solver(g);
  for (int a = 0; a < g.n(); ++a)
    for (int b = a + 1; b < g.n(); ++b) {
      cap_t x = solver.solve(a, b, false).value;
      ++t.calls;
      t.at(a, b) = t.at(b, a) = x;
    }
  return t;
}

inline constexpr int brute_force_limit = 16;

// Exhaustive minimum separator. Among minimum ones, the lexicographically
// smallest sorted id list wins. Adjacent pairs are handled on G - {s,t}.
inline MaxFlowResult brute_force_separator(const UndirectedGraph& g, int s, int t) {
  int n = g.n();
  if (n > brute_force_limit) throw oracle_error("brute force limited to 16 nodes");
  if (s < 0 || t < 0 || s >= n || t >= n) throw oracle_error("node id out of range");
  if (s == t) throw oracle_error("source equals sink");
  std::vector<std::uint32_t> adj(n, 0);
  for (auto [u, v] : g.edges()) {
    if ((u == s && v == t) || (u == t && v == s)) continue;
    adj[u] |= 1u << v, adj[v] |= 1u << u;
  }
  auto component = [&](std::uint32_t removed) {
    std::uint32_t seen = 1u << s, frontier = seen;
    while (frontier) {
      std::uint32_t next = 0;
      for (std::uint32_t f = frontier; f; f &= f - 1) next |= adj[std::countr_zero(f)];
      next &= ~seen & ~removed;
      seen |= next;
      frontier = next;
    }
    return seen;
  };
  std::vector<int> others;
  for (int v = 0; v < n; ++v)
    if (v != s && v != t) others.push_back(v);
  auto lex_less = [&](std::uint32_t a, std::uint32_t b) {
    // compare sorted member lists; a proper prefix is smaller
    while (a && b) {
      int x = std::countr_zero(a), y = std::countr_zero(b);
      if (x != y) return x < y;
      a &= a - 1, b &= b - 1;
    }
    return a == 0 && b != 0;
  };
  bool found = false;
  std::uint32_t best = 0;
  cap_t best_cap = 0;
  int k = (int)others.size();
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    std::uint32_t removed = 0;
    cap_t c = 0;
    for (std::uint32_t m = mask; m; m &= m - 1) {
      int v = others[std::countr_zero(m)];
      removed |= 1u << v;
      c += g.capacity(v);
    }
    if (found && (c > best_cap || (c == best_cap && !lex_less(removed, best)))) continue;
    if (component(removed) >> t & 1) continue;
    found = true, best = removed, best_cap = c;
  }
  MaxFlowResult r;
  r.adjacency_bonus = g.adjacent(s, t) ? 1 : 0;
  r.value = best_cap + r.adjacency_bonus;
  VertexCut& cut = r.cut;
  cut.s = s, cut.t = t, cut.capacity = best_cap;
  cut.side_s = NodeSet(n), cut.separator = NodeSet(n), cut.side_t = NodeSet(n);
  std::uint32_t side = component(best);
  for (int v = 0; v < n; ++v) {
    if (best >> v & 1) cut.separator.set(v);
    else if (side >> v & 1) cut.side_s.set(v);
    else cut.side_t.set(v);
  }
  return r;
}

inline AllPairsTable brute_force_all_pairs(const UndirectedGraph& g) {
  AllPairsTable t{g.n(), std::vector<cap_t>((std::size_t)g.n() * g.n(), AllPairsTable::none)};
  for (int a = 0; a < g.n(); ++a)
    for (int b = a + 1; b < g.n(); ++b) t.at(a, b) = t.at(b, a) = brute_force_separator(g, a, b).value;
  return t;
}

using BitVectors = std::vector<std::vector<int>>;

inline bool brute_force_3ov(const BitVectors& A, const BitVectors& B, const BitVectors& C) {
  std::size_t d = A.empty() ? (B.empty() ? (C.empty() ? 0 : C[0].size()) : B[0].size()) : A[0].size();
  auto pack = [&](const BitVectors& X) {
    std::vector<std::vector<std::uint64_t>> out;
    for (auto& x : X) {
      if (x.size() != d) throw oracle_error("ragged vector dimensions");
      std::vector<std::uint64_t> w((d + 63) / 64, 0);
      for (std::size_t i = 0; i < d; ++i) {
        if (x[i] != 0 && x[i] != 1) throw oracle_error("vector entries must be 0 or 1");
        if (x[i]) w[i / 64] |= std::uint64_t{1} << (i % 64);
      }
      out.push_back(std::move(w));
    }
    return out;
  };
  auto a = pack(A), b = pack(B), c = pack(C);
  for (auto& x : a)
    for (auto& y : b)
      for (auto& z : c) {
        bool orth = true;
        for (std::size_t w = 0; w < x.size() && orth; ++w)
          if (x[w] & y[w] & z[w]) orth = false;
        if (orth) return true;
      }
  return false;
}

}  // namespace apmf
