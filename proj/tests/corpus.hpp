#pragma once
// Seeded graph families shared by unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "apmf/flow.hpp"
#include "apmf/graph.hpp"

namespace corpus {

// Random spanning tree plus each other pair with probability p.
inline apmf::UndirectedGraph random_connected(int n, double p, std::uint64_t seed, apmf::cap_t max_cap = 1) {
  std::mt19937_64 rng(seed);
  auto unit = [&] { return double(rng() >> 11) * 0x1.0p-53; };
  std::set<std::pair<int, int>> e;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);
  for (int i = 1; i < n; ++i) {
    int a = perm[i], b = perm[rng() % i];
    e.insert({std::min(a, b), std::max(a, b)});
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (unit() < p) e.insert({a, b});
  std::vector<apmf::cap_t> cap(n, 1);
  if (max_cap > 1)
    for (auto& c : cap) c = 1 + apmf::cap_t(rng() % max_cap);
  return apmf::UndirectedGraph(n, {e.begin(), e.end()}, cap);
}

// Density sweep from tree (p = 0) to complete (p = 1).
inline double density(int i, int count) { return count <= 1 ? 0.5 : double(i % 6) / 5.0; }

// k dense blocks of size b in a ring, consecutive blocks joined by one edge.
inline apmf::UndirectedGraph clustered(int k, int b, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&] { return double(rng() >> 11) * 0x1.0p-53; };
  std::set<std::pair<int, int>> e;
  for (int c = 0; c < k; ++c) {
    int o = c * b;
    for (int i = 1; i < b; ++i) e.insert({o + int(rng() % i), o + i});
    for (int i = 0; i < b; ++i)
      for (int j = i + 1; j < b; ++j)
        if (unit() < p) e.insert({o + i, o + j});
  }
  for (int c = 0; c < k && k > 1; ++c) {
    int a = c * b + int(rng() % b), d = ((c + 1) % k) * b + int(rng() % b);
    if (k == 2 && c == 1) break;
    e.insert({std::min(a, d), std::max(a, d)});
  }
  return apmf::UndirectedGraph(k * b, {e.begin(), e.end()});
}

inline apmf::UndirectedGraph path(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return apmf::UndirectedGraph(n, e);
}

// Superposition of random s-t walks-turned-paths, each one unit, while every
// internal node stays within capacity. Usually dense and full of cycles.
inline apmf::FlowAssignment dense_flow(const apmf::UndirectedGraph& g, int s, int t, std::uint64_t seed,
                                       int attempts = 200) {
  std::mt19937_64 rng(seed);
  std::vector<apmf::cap_t> through(g.n(), 0);
  apmf::FlowAssignment f{s, t, {}};
  for (int a = 0; a < attempts; ++a) {
    // random DFS path from s to t, avoiding saturated nodes
    std::vector<int> prev(g.n(), -2), st{s};
    prev[s] = -1;
    bool found = false;
    while (!st.empty() && !found) {
      int v = st.back();
      st.pop_back();
      std::vector<int> nb = g.neighbors(v);
      for (int i = (int)nb.size() - 1; i > 0; --i) std::swap(nb[i], nb[rng() % (i + 1)]);
      for (int w : nb) {
        if (prev[w] != -2) continue;
        if (v == s && w == t) continue;  // keep the direct edge out
        if (w != t && through[w] >= g.capacity(w)) continue;
        prev[w] = v;
        if (w == t) {
          found = true;
          break;
        }
        st.push_back(w);
      }
    }
    if (!found) break;
    for (int w = t; prev[w] != -1; w = prev[w]) {
      f.arcs.push_back({prev[w], w, 1});
      if (w != t) ++through[w];
    }
  }
  return f;
}

// s -> k middle nodes -> k middle nodes -> t with every cross arc used once.
inline std::pair<apmf::UndirectedGraph, apmf::FlowAssignment> biclique_flow(int k) {
  int n = 2 * k + 2, s = 0, t = n - 1;
  std::vector<std::pair<int, int>> e;
  apmf::FlowAssignment f{s, t, {}};
  for (int i = 0; i < k; ++i) {
    e.emplace_back(s, 1 + i), e.emplace_back(1 + k + i, t);
    f.arcs.push_back({s, 1 + i, k}), f.arcs.push_back({1 + k + i, t, k});
    for (int j = 0; j < k; ++j) e.emplace_back(1 + i, 1 + k + j), f.arcs.push_back({1 + i, 1 + k + j, 1});
  }
  std::vector<apmf::cap_t> cap(n, k);
  return {apmf::UndirectedGraph(n, e, cap), f};
}

}  // namespace corpus
