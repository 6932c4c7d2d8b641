#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "apmf_tree.hpp"
#include "flow.hpp"
#include "graph.hpp"
#include "maxflow.hpp"
#include "sparsify.hpp"

namespace apmf {

struct cert_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CertPair {
  int g = 0;  // row index g_uv as written
  int u = 0, v = 0;
  cap_t p = 0;
  bool operator==(const CertPair&) const = default;
};

// For an undirected node-capacitated target, cut ids live in the split network
// (x_in = 2x, x_out = 2x+1) and flows are arcs between graph nodes. For a
// directed target both use network ids.
struct Certificate {
  std::vector<CertPair> pairs;
  std::vector<std::vector<int>> cut_s;       // ascending
  std::vector<std::vector<FlowArc>> flows;   // per pair
  bool operator==(const Certificate&) const = default;
};

// S ∪ C mapped onto the split network: both copies of S, in-copies of C.
inline std::vector<int> split_side(const VertexCut& c) {
  std::vector<int> out;
  c.side_s.for_each([&](int x) { out.push_back(in_node(x)), out.push_back(out_node(x)); });
  c.separator.for_each([&](int x) { out.push_back(in_node(x)); });
  std::sort(out.begin(), out.end());
  return out;
}

// ---- emission ----

struct OracleSource {};
using AnswerSource = std::variant<OracleSource, const ApmfIndex*>;

inline Certificate emit_certificate(const UndirectedGraph& g, const std::vector<std::pair<int, int>>& Q,
                                    AnswerSource src = OracleSource{}) {
  Certificate c;
  VertexFlowSolver solver(g);
  for (std::size_t i = 0; i < Q.size(); ++i) {
    auto [u, v] = Q[i];
    if (u < 0 || v < 0 || u >= g.n() || v >= g.n() || u == v) throw cert_error("bad pair in query set");
    MaxFlowResult r = solver.solve(u, v, true);
    cap_t p = r.value;
    VertexCut cut = r.cut;
    if (auto* idx = std::get_if<const ApmfIndex*>(&src)) {
      if (!(*idx)->cfg.retain_cuts) throw cert_error("index has no separators; pair not covered");
      auto ref = query_separator(**idx, u, v);
      if (!ref) throw cert_error("pair " + std::to_string(u) + " " + std::to_string(v) + " not covered by index");
      p = ref->value;
      cut = materialize(**idx, u, v, *ref);
    }
    c.pairs.push_back({(int)i, u, v, p});
    c.cut_s.push_back(split_side(cut));
    c.flows.push_back(sparsify(r.flow).arcs);
  }
  return c;
}

// ---- text format ----

inline std::string serialize_certificate(const Certificate& c) {
  std::string out = "cert apmf 1\n";
  for (auto& q : c.pairs)
    out += "pair " + std::to_string(q.g) + " " + std::to_string(q.u) + " " + std::to_string(q.v) + " " +
           std::to_string(q.p) + "\n";
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    out += "cutS " + std::to_string(c.pairs[i].g);
    for (int x : c.cut_s[i]) out += " " + std::to_string(x);
    out += "\n";
  }
  for (std::size_t i = 0; i < c.pairs.size(); ++i)
    for (auto& a : c.flows[i])
      out += "flow " + std::to_string(c.pairs[i].g) + " " + std::to_string(a.u) + " " + std::to_string(a.v) + " " +
             std::to_string(a.f) + "\n";
  return out;
}

inline Certificate parse_certificate(std::string_view text) {
  Certificate c;
  int section = -1;  // 0 pair, 1 cutS, 2 flow
  std::unordered_map<std::int64_t, int> row;
  std::vector<char> has_cut;
  detail::for_each_line(text, [&](int line, std::string_view raw) {
    auto tok = detail::split_ws(raw);
    auto fail = [&](const std::string& m) { throw cert_error("line " + std::to_string(line) + ": " + m); };
    if (tok.empty()) return;
    if (section < 0) {
      if (tok.size() != 3 || tok[0] != "cert" || tok[1] != "apmf" || tok[2] != "1") fail("bad header");
      section = 0;
      return;
    }
    int kind = tok[0] == "pair" ? 0 : tok[0] == "cutS" ? 1 : tok[0] == "flow" ? 2 : -1;
    if (kind < 0) fail("unknown record");
    if (kind < section) fail("section out of order");
    section = kind;
    std::int64_t gi;
    if (tok.size() < 2 || !detail::parse_int(tok[1], gi)) fail("malformed record");
    if (kind == 0) {
      std::int64_t u, v, p;
      if (tok.size() != 5 || !detail::parse_int(tok[2], u) || !detail::parse_int(tok[3], v) ||
          !detail::parse_int(tok[4], p))
        fail("malformed pair");
      if (gi < 0 || gi > INT32_MAX || u < 0 || v < 0 || u > INT32_MAX || v > INT32_MAX) fail("id out of range");
      if (row.count(gi)) fail("duplicate pair index");
      row[gi] = (int)c.pairs.size();
      c.pairs.push_back({(int)gi, (int)u, (int)v, p});
      c.cut_s.emplace_back();
      c.flows.emplace_back();
      has_cut.push_back(0);
      return;
    }
    auto it = row.find(gi);
    if (it == row.end()) fail("unknown pair index");
    int r = it->second;
    if (kind == 1) {
      if (has_cut[r]) fail("duplicate cutS section");
      has_cut[r] = 1;
      for (std::size_t i = 2; i < tok.size(); ++i) {
        std::int64_t x;
        if (!detail::parse_int(tok[i], x) || x < 0 || x > INT32_MAX) fail("malformed cut member");
        if (!c.cut_s[r].empty() && x <= c.cut_s[r].back()) fail("cut members must be strictly ascending");
        c.cut_s[r].push_back((int)x);
      }
      return;
    }
    std::int64_t a, b, f;
    if (tok.size() != 5 || !detail::parse_int(tok[2], a) || !detail::parse_int(tok[3], b) ||
        !detail::parse_int(tok[4], f))
      fail("malformed flow");
    if (a < 0 || b < 0 || a > INT32_MAX || b > INT32_MAX) fail("id out of range");
    if (f < 0) fail("negative flow");
    c.flows[r].push_back({(int)a, (int)b, f});
  });
  if (section < 0) throw cert_error("missing header");
  return c;
}

// ---- verification ----

struct PairVerdict {
  bool flow_ok = false, cut_ok = false;
  cap_t flow_value = 0, crossing = 0;
  std::int64_t work = 0;
  std::string reason;
  bool certified() const { return flow_ok && cut_ok; }
};

namespace detail {

// Target-independent flow check. arc_cap(a,b) < 0 means no arc; node_cap(x) < 0 means uncapped.
template <class ArcCap, class NodeCap>
bool check_flow(const std::vector<FlowArc>& arcs, int s, int t, cap_t p, cap_t bonus, ArcCap&& arc_cap,
                NodeCap&& node_cap, PairVerdict& pv) {
  std::unordered_map<int, std::pair<cap_t, cap_t>> io;  // in, out
  std::map<std::pair<int, int>, cap_t> load;
  for (auto& a : arcs) {
    pv.work += 3;
    if (a.f < 0) return pv.reason = "negative arc flow", false;
    if (a.f == 0) continue;
    cap_t c = arc_cap(a.u, a.v);
    if (c < 0) return pv.reason = "flow uses nonexistent arc " + std::to_string(a.u) + "->" + std::to_string(a.v), false;
    cap_t& l = load[{a.u, a.v}];
    l += a.f;
    if (c > 0 && l > c) return pv.reason = "arc capacity exceeded", false;
    io[a.u].second += a.f;
    io[a.v].first += a.f;
  }
  for (auto& [x, q] : io) {
    pv.work += 2;
    if (x == s || x == t) continue;
    if (q.first != q.second) return pv.reason = "conservation violated at node " + std::to_string(x), false;
    cap_t nc = node_cap(x);
    if (nc >= 0 && q.first > nc) return pv.reason = "node capacity exceeded at " + std::to_string(x), false;
  }
  auto si = io.find(s);
  cap_t val = si == io.end() ? 0 : si->second.second - si->second.first;
  pv.flow_value = val + bonus;
  if (val + bonus < p) return pv.reason = "flow value " + std::to_string(val + bonus) + " below claim", false;
  return true;
}

}  // namespace detail

// Per-pair lower-bound check on a node-capacitated graph. Arc capacity is
// unbounded on edges; through-flow of internal nodes is capped by c(x). For
// adjacent pairs the edge {u,v} itself is excluded and contributes 1.
inline std::vector<PairVerdict> verify_flows(const UndirectedGraph& g, const Certificate& c) {
  std::vector<PairVerdict> out(c.pairs.size());
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    auto [gi, u, v, p] = c.pairs[i];
    PairVerdict& pv = out[i];
    if (u < 0 || v < 0 || u >= g.n() || v >= g.n() || u == v) {
      pv.reason = "bad pair endpoints";
      continue;
    }
    bool adj = g.adjacent(u, v);
    pv.work += 2;
    auto arc_cap = [&](int a, int b) -> cap_t {
      if (a < 0 || b < 0 || a >= g.n() || b >= g.n() || !g.adjacent(a, b)) return -1;
      if (adj && ((a == u && b == v) || (a == v && b == u))) return -1;
      return 0;
    };
    auto node_cap = [&](int x) -> cap_t { return g.capacity(x); };
    pv.flow_ok = detail::check_flow(c.flows[i], u, v, p, adj ? 1 : 0, arc_cap, node_cap, pv);
  }
  return out;
}

inline std::vector<PairVerdict> verify_flows(const DirectedNetwork& net, const Certificate& c) {
  std::map<std::pair<int, int>, cap_t> cap;
  for (auto& a : net.arcs) cap[{a.from, a.to}] += a.cap;
  std::vector<PairVerdict> out(c.pairs.size());
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    auto [gi, u, v, p] = c.pairs[i];
    PairVerdict& pv = out[i];
    if (u < 0 || v < 0 || u >= net.n || v >= net.n || u == v) {
      pv.reason = "bad pair endpoints";
      continue;
    }
    auto arc_cap = [&](int a, int b) -> cap_t {
      auto it = cap.find({a, b});
      return it == cap.end() ? -1 : it->second;
    };
    pv.flow_ok = detail::check_flow(c.flows[i], u, v, p, 0, arc_cap, [](int) -> cap_t { return -1; }, pv);
  }
  return out;
}

struct CutCheck {
  std::vector<cap_t> crossing;  // -1 when the cut is malformed
  std::vector<std::string> reason;
  bool dense = false;
};

namespace detail {

// S membership rows over N network nodes; malformed rows get a reason.
inline std::vector<std::vector<char>> cut_rows(int N, const Certificate& c, std::vector<int> src,
                                               std::vector<int> snk, std::vector<std::string>& reason) {
  std::vector<std::vector<char>> P(c.pairs.size(), std::vector<char>(N, 0));
  reason.assign(c.pairs.size(), "");
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    for (int x : c.cut_s[i]) {
      if (x < 0 || x >= N) {
        reason[i] = "cut member out of range";
        break;
      }
      P[i][x] = 1;
    }
    if (!reason[i].empty()) continue;
    if (src[i] < 0 || snk[i] < 0 || src[i] >= N || snk[i] >= N) reason[i] = "bad pair endpoints";
    else if (!P[i][src[i]]) reason[i] = "source not in S";
    else if (P[i][snk[i]]) reason[i] = "sink in S";
  }
  return P;
}

// P' = P * M, crossing = sum over z outside S of P'[row, z]
inline std::vector<cap_t> dense_crossing(const std::vector<std::vector<char>>& P, const IncidenceMatrix& M) {
  int N = M.n;
  std::vector<cap_t> out(P.size(), 0);
  std::vector<cap_t> row(N);
  for (std::size_t i = 0; i < P.size(); ++i) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < N; ++x) {
      if (!P[i][x]) continue;
      const cap_t* m = &M.a[(std::size_t)x * N];
      for (int z = 0; z < N; ++z) row[z] += m[z];
    }
    cap_t s = 0;
    for (int z = 0; z < N; ++z)
      if (!P[i][z]) s += row[z];
    out[i] = s;
  }
  return out;
}

inline std::vector<cap_t> sparse_crossing(const std::vector<std::vector<char>>& P, const std::vector<Arc>& arcs) {
  std::vector<cap_t> out(P.size(), 0);
  for (const Arc& a : arcs)
    for (std::size_t i = 0; i < P.size(); ++i)
      if (P[i][a.from] && !P[i][a.to]) out[i] += a.cap;
  return out;
}

inline CutCheck run_cut_check(int N, const std::vector<Arc>& arcs, const std::vector<std::vector<char>>& P,
                              std::vector<std::string> reason, bool want_dense, int budget, bool& agree) {
  CutCheck cc;
  cc.reason = std::move(reason);
  auto sparse = sparse_crossing(P, arcs);
  cc.crossing = sparse;
  agree = true;
  if (want_dense && N <= budget) {
    DirectedNetwork net{N, arcs, {}, {}};
    auto dense = dense_crossing(P, incidence_matrix(net, budget));
    cc.dense = true;
    agree = dense == sparse;
    cc.crossing = dense;
  }
  for (std::size_t i = 0; i < P.size(); ++i)
    if (!cc.reason[i].empty()) cc.crossing[i] = -1;
  return cc;
}

}  // namespace detail

struct CutOptions {
  bool dense = true;
  int budget = default_dense_budget;
};

// Crossing capacities per pair in the split network (node-capacitated target).
// Adjacent pairs: crossing direct arcs are removed and 1 is added.
inline CutCheck cut_crossings(const UndirectedGraph& g, const Certificate& c, CutOptions opt, bool* agree = nullptr) {
  DirectedNetwork net = split_transform(g);
  std::vector<int> src, snk;
  for (auto& q : c.pairs) {
    bool ok = q.u >= 0 && q.v >= 0 && q.u < g.n() && q.v < g.n() && q.u != q.v;
    src.push_back(ok ? out_node(q.u) : -1), snk.push_back(ok ? in_node(q.v) : -1);
  }
  std::vector<std::string> reason;
  auto P = detail::cut_rows(net.n, c, src, snk, reason);
  bool ag = true;
  CutCheck cc = detail::run_cut_check(net.n, net.arcs, P, std::move(reason), opt.dense, opt.budget, ag);
  if (agree) *agree = ag;
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    if (cc.crossing[i] < 0) continue;
    int u = c.pairs[i].u, v = c.pairs[i].v;
    if (!g.adjacent(u, v)) continue;
    cap_t d = g.capacity(u) + g.capacity(v);
    if (P[i][out_node(u)] && !P[i][in_node(v)]) cc.crossing[i] -= d;
    if (P[i][out_node(v)] && !P[i][in_node(u)]) cc.crossing[i] -= d;
    cc.crossing[i] += 1;
  }
  return cc;
}

inline CutCheck cut_crossings(const DirectedNetwork& net, const Certificate& c, CutOptions opt,
                              bool* agree = nullptr) {
  std::vector<int> src, snk;
  for (auto& q : c.pairs) src.push_back(q.u), snk.push_back(q.v);
  std::vector<std::string> reason;
  auto P = detail::cut_rows(net.n, c, src, snk, reason);
  bool ag = true;
  CutCheck cc = detail::run_cut_check(net.n, net.arcs, P, std::move(reason), opt.dense, opt.budget, ag);
  if (agree) *agree = ag;
  return cc;
}

template <class Target>
std::vector<PairVerdict> verify_cuts(const Target& tgt, const Certificate& c, CutOptions opt = {},
                                     bool* agree = nullptr, bool* dense_used = nullptr) {
  CutCheck cc = cut_crossings(tgt, c, opt, agree);
  if (dense_used) *dense_used = cc.dense;
  std::vector<PairVerdict> out(c.pairs.size());
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    out[i].crossing = cc.crossing[i];
    if (cc.crossing[i] < 0) out[i].reason = cc.reason[i];
    else if (cc.crossing[i] > c.pairs[i].p) out[i].reason = "cut crossing " + std::to_string(cc.crossing[i]) + " exceeds claim";
    else out[i].cut_ok = true;
  }
  return out;
}

struct VerifyReport {
  std::vector<PairVerdict> pairs;
  int certified = 0;
  double matmul_seconds = 0, flow_seconds = 0;
  bool dense_used = false, paths_agree = true;
  bool all_certified() const { return certified == (int)pairs.size(); }
};

template <class Target>
VerifyReport verify(const Target& tgt, const Certificate& c, CutOptions opt = {}) {
  using clk = std::chrono::steady_clock;
  VerifyReport r;
  auto t0 = clk::now();
  auto fl = verify_flows(tgt, c);
  auto t1 = clk::now();
  auto cu = verify_cuts(tgt, c, opt, &r.paths_agree, &r.dense_used);
  auto t2 = clk::now();
  r.flow_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.matmul_seconds = std::chrono::duration<double>(t2 - t1).count();
  r.pairs.resize(c.pairs.size());
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    PairVerdict& pv = r.pairs[i];
    pv = fl[i];
    pv.cut_ok = cu[i].cut_ok;
    pv.crossing = cu[i].crossing;
    if (pv.reason.empty()) pv.reason = cu[i].reason;
    else if (!cu[i].reason.empty()) pv.reason += "; " + cu[i].reason;
    if (pv.certified()) ++r.certified;
  }
  return r;
}

// ---- volume bounds ----

enum class VolumeSetting { unit_node, general_node, unit_edge };

struct VolumeVerdict {
  int volume = 0;
  cap_t value = 0;
  bool ok = true;     // hard check (node settings only)
  double ratio = 0;   // vol / (n * sqrt(val)), unit-edge report
};

inline std::vector<VolumeVerdict> check_volume_bounds(const Certificate& c, VolumeSetting s, int n) {
  std::vector<VolumeVerdict> out;
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    FlowAssignment f{c.pairs[i].u, c.pairs[i].v, c.flows[i]};
    VolumeVerdict vv;
    vv.volume = f.volume();
    vv.value = f.value();
    if (s == VolumeSetting::unit_edge) {
      vv.ratio = vv.value > 0 ? vv.volume / (n * std::sqrt((double)vv.value)) : 0.0;
    } else {
      vv.ok = vv.volume <= 2 * n;
    }
    out.push_back(vv);
  }
  return out;
}

}  // namespace apmf
