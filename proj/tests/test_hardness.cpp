#include <gtest/gtest.h>

#include "apmf/apmf_tree.hpp"
#include "apmf/hardness.hpp"
#include "apmf/oracle.hpp"
#include "corpus.hpp"

using namespace apmf;

namespace {

ThreeOvInstance all_ones(int n, int d) {
  ThreeOvInstance I{n, d, {}, {}, {}, false, 0};
  I.A = I.B = I.C = BitVectors(n, std::vector<int>(d, 1));
  return I;
}

// max-flow of (x,y) with the other terminals deleted
cap_t isolated_value(const UndirectedGraph& g, const std::vector<int>& X, const std::vector<int>& Y, int x, int y) {
  std::vector<char> drop(g.n(), 0);
  for (int z : X) drop[z] = z != x;
  for (int z : Y) drop[z] = z != y;
  std::vector<int> id(g.n(), -1);
  int k = 0;
  for (int v = 0; v < g.n(); ++v)
    if (!drop[v]) id[v] = k++;
  std::vector<std::pair<int, int>> e;
  for (auto [u, v] : g.edges())
    if (!drop[u] && !drop[v]) e.emplace_back(id[u], id[v]);
  std::vector<cap_t> cap;
  for (int v = 0; v < g.n(); ++v)
    if (!drop[v]) cap.push_back(g.capacity(v));
  // the restriction may be disconnected; solve on the split network directly
  DirectedNetwork net;
  net.n = 2 * k;
  for (int v = 0; v < k; ++v) net.add_arc(in_node(v), out_node(v), cap[v]);
  for (auto [u, v] : e) {
    net.add_arc(out_node(u), in_node(v), cap[u] + cap[v]);
    net.add_arc(out_node(v), in_node(u), cap[u] + cap[v]);
  }
  return network_max_flow(net, out_node(id[x]), in_node(id[y]));
}

}  // namespace

TEST(Gen, PlantedIsYes) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto I = gen_3ov(3, 3, s, true);
    EXPECT_TRUE(brute_force_3ov(I.A, I.B, I.C));
  }
  auto o = all_ones(3, 2);
  EXPECT_FALSE(brute_force_3ov(o.A, o.B, o.C));
}

TEST(Gen, Deterministic) {
  auto a = gen_3ov(4, 5, 99, false), b = gen_3ov(4, 5, 99, false);
  EXPECT_EQ(a.A, b.A);
  EXPECT_EQ(a.C, b.C);
  auto ra = assemble(a), rb = assemble(b);
  EXPECT_EQ(serialize_graph(ra.graph), serialize_graph(rb.graph));
  EXPECT_EQ(serialize_sidecar(ra), serialize_sidecar(rb));
  EXPECT_THROW(gen_3ov(0, 2, 1, false), hardness_error);
}

TEST(Layered, CapacityClasses) {
  auto I = all_ones(2, 3);
  auto L = build_layered(I);
  EXPECT_EQ(L.g.cap[L.hub], 2 * (3 - 1));
  EXPECT_EQ(L.w_nodes, 4);
  EXPECT_EQ(L.e_nodes, 12);
  EXPECT_EQ(build_layered(all_ones(2, 1)).hub, -1);
}

TEST(Assemble, SmallNoAndYes) {
  auto no = assemble(all_ones(2, 2));
  DecisionTrace tr;
  EXPECT_EQ(decide_via(no, OracleEngine{}, &tr), Decision::no);
  for (auto v : tr.values) EXPECT_EQ(v, 8);
  int yes_seen = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto R = assemble(gen_3ov(2, 2, s, true));
    EXPECT_EQ(decide_via(R, OracleEngine{}, &tr), Decision::yes);
    if (std::count(tr.values.begin(), tr.values.end(), 7)) ++yes_seen;
  }
  EXPECT_GT(yes_seen, 0);
}

TEST(Assemble, ValueIsFullMinusOrthogonalCount) {
  for (int n = 1; n <= 3; ++n)
    for (int d = 1; d <= 3; ++d)
      for (std::uint64_t s = 0; s < 20; ++s) {
        auto I = gen_3ov(n, d, 1000 * n + 100 * d + s, s % 2);
        auto R = assemble(I);
        DecisionTrace tr;
        decide_via(R, OracleEngine{}, &tr);
        for (int i = 0; i < n; ++i)
          for (int k = 0; k < n; ++k) {
            int orth = 0;
            for (int j = 0; j < n; ++j) orth += orthogonal(I, i, j, k);
            EXPECT_EQ(tr.values[i * n + k], R.yes_threshold - orth);
          }
      }
}

TEST(Assemble, EndToEnd) {
  for (int n = 1; n <= 3; ++n)
    for (int d = 1; d <= 3; ++d)
      for (std::uint64_t s = 0; s < 50; ++s) {
        auto I = gen_3ov(n, d, s * 31 + n * 7 + d, s % 3 == 0);
        bool truth = brute_force_3ov(I.A, I.B, I.C);
        EXPECT_EQ(decide_via(assemble(I)) == Decision::yes, truth);
      }
  EXPECT_EQ(decide_via(assemble(all_ones(3, 3))), Decision::no);
}

TEST(Assemble, DecideViaIndex) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    auto I = gen_3ov(2, 2, s, s % 2);
    auto R = assemble(I);
    ApmfConfig cfg;
    cfg.seed = s;
    auto idx = build(R.graph, cfg);
    EXPECT_EQ(decide_via(R, &idx), decide_via(R));
  }
}

TEST(Gadget, UnitShiftOnSinglePair) {
  for (int i = 0; i < 30; ++i) {
    auto g = corpus::random_connected(8, 0.3, 50 + i);
    int x = 0, y = 7;
    if (g.adjacent(x, y)) continue;
    auto h = isolating_gadget(g, {x}, {y});
    EXPECT_EQ(h.n(), g.n() + 4);
    EXPECT_EQ(max_flow(h, x, y).value, max_flow(g, x, y).value + 2);
  }
}

TEST(Gadget, ShiftOnRandomHosts) {
  for (int i = 0; i < 40; ++i) {
    auto r = corpus::random_connected(12, 0.25, 70 + i, 2);
    std::vector<int> X{0, 1, 2}, Y{9, 10, 11};
    std::vector<cap_t> cap = r.capacities();
    for (int z : X) cap[z] = 1;
    for (int z : Y) cap[z] = 1;
    UndirectedGraph g(r.n(), r.edges(), cap);
    auto h = isolating_gadget(g, X, Y);
    EXPECT_EQ(h.n() - g.n(), 2 * 6);
    VertexFlowSolver solver(h);
    for (int x : X)
      for (int y : Y) {
        if (g.adjacent(x, y)) continue;
        EXPECT_EQ(solver.solve(x, y, false).value, isolated_value(g, X, Y, x, y) + 6);
      }
  }
}

TEST(Gadget, ShiftOnAssembledInstances) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto I = gen_3ov(2, 2, s, s % 2);
    auto L = build_layered(I);
    std::vector<int> first;
    auto blown = unit_blowup(L.g, &first);
    std::vector<int> X, Y;
    for (int v : L.v1) X.push_back(first[v]);
    for (int v : L.v3) Y.push_back(first[v]);
    auto full = isolating_gadget(blown, X, Y).graph();
    VertexFlowSolver solver(full);
    for (int x : X)
      for (int y : Y) {
        // host may be disconnected (d = 1); isolated_value works on raw parts through the full graph minus gadget
        auto host_val = [&] {
          GraphParts p = blown;
          std::vector<char> drop(p.n, 0);
          for (int z : X) drop[z] = z != x;
          for (int z : Y) drop[z] = z != y;
          DirectedNetwork net;
          net.n = 2 * p.n;
          for (int v = 0; v < p.n; ++v) net.add_arc(in_node(v), out_node(v), drop[v] ? 1 : p.cap[v]);
          for (auto [u, v] : p.edges) {
            if (drop[u] || drop[v]) continue;
            net.add_arc(out_node(u), in_node(v), 2), net.add_arc(out_node(v), in_node(u), 2);
          }
          return network_max_flow(net, out_node(x), in_node(y));
        }();
        EXPECT_EQ(solver.solve(x, y, false).value, host_val + 4);
      }
  }
}

TEST(Gadget, EdgeCases) {
  auto g = corpus::path(4);
  EXPECT_EQ(isolating_gadget(g, {}, {3}), g);
  EXPECT_THROW(isolating_gadget(g, {1}, {1}), hardness_error);
  UndirectedGraph wide(3, {{0, 1}, {1, 2}}, {2, 1, 1});
  EXPECT_THROW(isolating_gadget(wide, {0}, {2}), hardness_error);
}

TEST(Census, OwnClosedForm) {
  for (int n = 1; n <= 3; ++n)
    for (int d = 1; d <= 3; ++d) {
      auto R = assemble(gen_3ov(n, d, 5, false));
      const auto& c = R.census;
      EXPECT_EQ(c.blown_nodes, c.own_pre_gadget);
      EXPECT_EQ(c.gadget_nodes, 2 * (2 * n));
      EXPECT_EQ(c.total_nodes, c.blown_nodes + c.gadget_nodes);
    }
}

// The quoted closed form 3dn + 2n(d-1) + 2n + nd describes a different internal
// wiring; this wiring does not meet it (see README). Kept as an honest check.
TEST(Census, QuotedClosedForm) {
  auto R = assemble(gen_3ov(2, 2, 5, false));
  RecordProperty("quoted", std::to_string(R.census.quoted_pre_gadget));
  RecordProperty("actual", std::to_string(R.census.blown_nodes));
  EXPECT_EQ(R.census.blown_nodes, R.census.quoted_pre_gadget);
}

TEST(Sidecar, RoundTrip) {
  auto R = assemble(gen_3ov(3, 2, 18446744073709551615ull, true));
  auto s = parse_sidecar(serialize_sidecar(R));
  EXPECT_EQ(s.v1, R.v1);
  EXPECT_EQ(s.v3, R.v3);
  EXPECT_EQ(s.yes_at, R.no_value);
  EXPECT_EQ(s.full, R.yes_threshold);
  EXPECT_EQ(s.seed, R.seed);
  EXPECT_THROW(parse_sidecar("bogus 1\n"), hardness_error);
}
