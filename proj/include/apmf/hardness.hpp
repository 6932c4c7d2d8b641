#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "apmf_tree.hpp"
#include "graph.hpp"
#include "maxflow.hpp"
#include "oracle.hpp"

namespace apmf {

struct hardness_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ThreeOvInstance {
  int n = 0, d = 0;
  BitVectors A, B, C;
  bool planted = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1 || d < 1) throw hardness_error("n and d must be positive");
    for (auto* X : {&A, &B, &C}) {
      if ((int)X->size() != n) throw hardness_error("vector set size differs from n");
      for (auto& x : *X) {
        if ((int)x.size() != d) throw hardness_error("vector dimension differs from d");
        for (int b : x)
          if (b != 0 && b != 1) throw hardness_error("vector entries must be 0 or 1");
      }
    }
  }
};

// Bits come from the raw mt19937_64 stream, so instances are identical across
// standard libraries.
inline ThreeOvInstance gen_3ov(int n, int d, std::uint64_t seed, bool planted) {
  if (n < 1 || d < 1) throw hardness_error("n and d must be positive");
  ThreeOvInstance I{n, d, {}, {}, {}, planted, seed};
  std::mt19937_64 rng(seed);
  auto bit = [&] { return int(rng() >> 63); };
  for (auto* X : {&I.A, &I.B, &I.C}) {
    X->assign(n, std::vector<int>(d));
    for (auto& x : *X)
      for (auto& b : x) b = bit();
  }
  if (planted) {
    int i = int(rng() % n), j = int(rng() % n), k = int(rng() % n);
    for (int x = 0; x < d; ++x)
      if (I.A[i][x] && I.B[j][x] && I.C[k][x]) {
        int which = int(rng() % 3);
        (which == 0 ? I.A[i][x] : which == 1 ? I.B[j][x] : I.C[k][x]) = 0;
      }
  }
  return I;
}

inline bool orthogonal(const ThreeOvInstance& I, int i, int j, int k) {
  for (int x = 0; x < I.d; ++x)
    if (I.A[i][x] && I.B[j][x] && I.C[k][x]) return false;
  return true;
}

// Raw node/edge lists. Intermediate stages may be disconnected (d = 1 has no
// hub), so they are not UndirectedGraph yet.
struct GraphParts {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<cap_t> cap;

  int add(cap_t c) {
    cap.push_back(c);
    return n++;
  }
  cap_t total_capacity() const {
    cap_t s = 0;
    for (cap_t c : cap) s += c;
    return s;
  }
  UndirectedGraph graph() const { return UndirectedGraph(n, edges, cap); }
  static GraphParts of(const UndirectedGraph& g) { return {g.n(), g.edges(), g.capacities()}; }
};

// Capacitated layered graph before blowup.
//   s_i (cap 1), t_k (cap 1)            one per first / third vector
//   hub (cap n(d-1))                    adjacent to every s_i and t_k; absent when d = 1
//   w_ij (cap 1)                        for each (i,j) with W_ij = supp a_i ∩ supp b_j nonempty; adjacent to s_i
//   e_ijx (cap 1), x in W_ij            adjacent to w_ij, and to t_k iff c_kx = 1
// Max-Flow(s_i, t_k) with the other s/t removed = n(d-1) + #{j : (i,j,k) not orthogonal}.
struct LayeredGraph {
  GraphParts g;
  std::vector<int> v1, v3;
  int hub = -1;
  int w_nodes = 0, e_nodes = 0;
};

inline LayeredGraph build_layered(const ThreeOvInstance& I) {
  I.validate();
  int n = I.n, d = I.d;
  LayeredGraph L;
  GraphParts& G = L.g;
  for (int i = 0; i < n; ++i) L.v1.push_back(G.add(1));
  for (int k = 0; k < n; ++k) L.v3.push_back(G.add(1));
  if (d > 1) {
    L.hub = G.add((cap_t)n * (d - 1));
    for (int s : L.v1) G.edges.emplace_back(s, L.hub);
    for (int t : L.v3) G.edges.emplace_back(t, L.hub);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::vector<int> W;
      for (int x = 0; x < d; ++x)
        if (I.A[i][x] && I.B[j][x]) W.push_back(x);
      if (W.empty()) continue;
      int w = G.add(1);
      ++L.w_nodes;
      G.edges.emplace_back(L.v1[i], w);
      for (int x : W) {
        int e = G.add(1);
        ++L.e_nodes;
        G.edges.emplace_back(w, e);
        for (int k = 0; k < n; ++k)
          if (I.C[k][x]) G.edges.emplace_back(e, L.v3[k]);
      }
    }
  return L;
}

// Same numbering as unit_blowup: node u becomes first[u] .. first[u+1]-1.
inline GraphParts unit_blowup(const GraphParts& g, std::vector<int>* first_out = nullptr) {
  std::vector<int> first(g.n + 1, 0);
  for (int v = 0; v < g.n; ++v) first[v + 1] = first[v] + (int)g.cap[v];
  GraphParts b{first[g.n], {}, std::vector<cap_t>(first[g.n], 1)};
  for (auto [u, v] : g.edges)
    for (int a = first[u]; a < first[u + 1]; ++a)
      for (int c = first[v]; c < first[v + 1]; ++c) b.edges.emplace_back(a, c);
  if (first_out) *first_out = std::move(first);
  return b;
}

// For each z in X ∪ Y: unit nodes z_in (adjacent to z and all of X) and
// z_out (adjacent to z and all of Y), appended after the host nodes.
// Terminals must have unit capacity: a wider z could route a second unit past
// its gadget pair.
inline GraphParts isolating_gadget(const GraphParts& host, const std::vector<int>& X, const std::vector<int>& Y) {
  std::vector<char> inx(host.n, 0);
  for (int x : X) {
    if (x < 0 || x >= host.n) throw hardness_error("gadget terminal out of range");
    inx[x] = 1;
  }
  for (int y : Y) {
    if (y < 0 || y >= host.n) throw hardness_error("gadget terminal out of range");
    if (inx[y]) throw hardness_error("gadget terminal sets overlap");
  }
  for (const auto* Z : {&X, &Y})
    for (int z : *Z)
      if (host.cap[z] != 1) throw hardness_error("gadget terminals need unit capacity");
  GraphParts r = host;
  if (X.empty() || Y.empty()) return r;
  std::vector<int> Z = X;
  Z.insert(Z.end(), Y.begin(), Y.end());
  for (int z : Z) {
    int zi = r.add(1), zo = r.add(1);
    for (int x : X) r.edges.emplace_back(zi, x);
    for (int y : Y) r.edges.emplace_back(zo, y);
    if (!inx[z]) r.edges.emplace_back(zi, z);  // z in Y
    else r.edges.emplace_back(zo, z);          // z in X
  }
  return r;
}

inline UndirectedGraph isolating_gadget(const UndirectedGraph& host, const std::vector<int>& X,
                                        const std::vector<int>& Y) {
  return isolating_gadget(GraphParts::of(host), X, Y).graph();
}

struct HardnessCensus {
  int layered_nodes = 0, blown_nodes = 0, gadget_nodes = 0, total_nodes = 0;
  int w_nodes = 0, e_nodes = 0, hub_copies = 0;
  std::int64_t edges = 0;
  // closed form quoted for the source construction: 3dn + 2n(d-1) + 2n + nd
  std::int64_t quoted_pre_gadget = 0;
  // closed form of this wiring: 2n + n(d-1) + #w + #e
  std::int64_t own_pre_gadget = 0;
  double edge_constant = 0;  // edges / (n^2 d^2)
};

struct ReductionInstance {
  UndirectedGraph graph;
  std::vector<int> v1, v3;
  cap_t yes_threshold = 0;  // nd + 2n
  cap_t no_value = 0;       // nd - 1 + 2n
  int n = 0, d = 0;
  std::uint64_t seed = 0;
  HardnessCensus census;
};

inline constexpr std::int64_t hardness_node_budget = 1 << 16;

inline ReductionInstance assemble(const ThreeOvInstance& I, std::int64_t node_budget = hardness_node_budget) {
  LayeredGraph L = build_layered(I);
  std::int64_t n = I.n, d = I.d;
  if (L.g.total_capacity() + 4 * n > node_budget) throw hardness_error("reduction instance exceeds node budget");
  std::vector<int> first;
  GraphParts blown = unit_blowup(L.g, &first);
  ReductionInstance R;
  for (int s : L.v1) R.v1.push_back(first[s]);
  for (int t : L.v3) R.v3.push_back(first[t]);
  GraphParts full = isolating_gadget(blown, R.v1, R.v3);
  R.graph = full.graph();
  R.n = I.n, R.d = I.d, R.seed = I.seed;
  R.yes_threshold = n * d + 2 * n;
  R.no_value = n * d - 1 + 2 * n;
  HardnessCensus& c = R.census;
  c.layered_nodes = L.g.n;
  c.blown_nodes = blown.n;
  c.gadget_nodes = full.n - blown.n;
  c.total_nodes = full.n;
  c.w_nodes = L.w_nodes, c.e_nodes = L.e_nodes;
  c.hub_copies = L.hub < 0 ? 0 : (int)L.g.cap[L.hub];
  c.edges = R.graph.m();
  c.quoted_pre_gadget = 3 * d * n + 2 * n * (d - 1) + 2 * n + n * d;
  c.own_pre_gadget = 2 * n + n * (d - 1) + c.w_nodes + c.e_nodes;
  c.edge_constant = double(c.edges) / double(n * n * d * d);
  return R;
}

// ---- decision ----

enum class Decision { no, yes };

struct OracleEngine {};
using DecisionEngine = std::variant<OracleEngine, const ApmfIndex*>;

struct DecisionTrace {
  std::vector<cap_t> values;  // row-major |V1| x |V3|
  cap_t min_value = 0;
};

inline Decision decide_via(const ReductionInstance& R, DecisionEngine eng = OracleEngine{}, DecisionTrace* tr = nullptr) {
  std::vector<cap_t> vals;
  std::optional<VertexFlowSolver> solver;
  if (std::holds_alternative<OracleEngine>(eng)) solver.emplace(R.graph);
  for (int s : R.v1)
    for (int t : R.v3) {
      cap_t x;
      if (solver) {
        x = solver->solve(s, t, false).value;
      } else {
        const ApmfIndex& idx = *std::get<const ApmfIndex*>(eng);
        if (idx.g.n() != R.graph.n()) throw hardness_error("index built for a different graph");
        auto q = query_value(idx, s, t);
        if (!q) throw hardness_error("engine lacks coverage of pair " + std::to_string(s) + " " + std::to_string(t));
        x = *q;
      }
      vals.push_back(x);
    }
  cap_t mn = vals.empty() ? R.yes_threshold : *std::min_element(vals.begin(), vals.end());
  if (tr) *tr = {vals, mn};
  return mn <= R.no_value ? Decision::yes : Decision::no;
}

// ---- sidecar ----

inline std::string serialize_sidecar(const ReductionInstance& R) {
  std::string out = "v1";
  for (int s : R.v1) out += " " + std::to_string(s);
  out += "\nv3";
  for (int t : R.v3) out += " " + std::to_string(t);
  out += "\nyes_at " + std::to_string(R.no_value) + "\n";
  out += "full " + std::to_string(R.yes_threshold) + "\n";
  out += "nd " + std::to_string(R.n) + " " + std::to_string(R.d) + "\n";
  out += "seed " + std::to_string(R.seed) + "\n";
  return out;
}

struct Sidecar {
  std::vector<int> v1, v3;
  cap_t yes_at = -1, full = -1;
  int n = 0, d = 0;
  std::uint64_t seed = 0;
};

inline Sidecar parse_sidecar(std::string_view text) {
  Sidecar s;
  detail::for_each_line(text, [&](int line, std::string_view raw) {
    auto tok = detail::split_ws(raw);
    if (tok.empty()) return;
    auto fail = [&](const char* m) { throw hardness_error("sidecar line " + std::to_string(line) + ": " + m); };
    std::vector<std::int64_t> xs;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      std::int64_t x;
      if (tok[0] == "seed") {
        // full 64-bit range
        std::uint64_t u = 0;
        for (char ch : tok[i]) {
          if (ch < '0' || ch > '9') fail("malformed seed");
          u = u * 10 + std::uint64_t(ch - '0');
        }
        s.seed = u;
        continue;
      }
      if (!detail::parse_int(tok[i], x) || x < 0) fail("malformed value");
      xs.push_back(x);
    }
    if (tok[0] == "v1" || tok[0] == "v3") {
      auto& dst = tok[0] == "v1" ? s.v1 : s.v3;
      for (auto x : xs) dst.push_back((int)x);
    } else if (tok[0] == "yes_at" && xs.size() == 1) {
      s.yes_at = xs[0];
    } else if (tok[0] == "full" && xs.size() == 1) {
      s.full = xs[0];
    } else if (tok[0] == "nd" && xs.size() == 2) {
      s.n = (int)xs[0], s.d = (int)xs[1];
    } else if (tok[0] != "seed") {
      fail("unknown record");
    }
  });
  return s;
}

}  // namespace apmf
