#include <gtest/gtest.h>

#include <map>

#include "apmf/maxflow.hpp"
#include "apmf/sparsify.hpp"
#include "corpus.hpp"

using namespace apmf;

namespace {

std::map<int, std::pair<cap_t, cap_t>> totals(const FlowAssignment& f) {
  std::map<int, std::pair<cap_t, cap_t>> m;
  for (auto& a : f.arcs) m[a.u].second += a.f, m[a.v].first += a.f;
  return m;
}

// a->b, c->b, c->d, a->d with a=0 b=1 c=2 d=3
FlowAssignment four() { return {0, 1, {{0, 1, 1}, {2, 1, 1}, {2, 3, 1}, {0, 3, 1}}}; }

}  // namespace

TEST(DirectedCycles, IdentityAndRemoval) {
  FlowAssignment p{0, 2, {{0, 1, 1}, {1, 2, 1}}};
  EXPECT_EQ(remove_directed_cycles(p).arcs, p.arcs);
  FlowAssignment c{0, 2, {{0, 1, 1}, {1, 2, 1}, {3, 4, 1}, {4, 5, 1}, {5, 3, 1}}};
  auto r = remove_directed_cycles(c);
  EXPECT_EQ(r.arcs, p.arcs);
  EXPECT_EQ(r.value(), 1);
}

TEST(DirectedCycles, RandomInjected) {
  for (int i = 0; i < 100; ++i) {
    auto g = corpus::random_connected(12, 0.5, 10 + i, 3);
    auto f = corpus::dense_flow(g, 0, 11, 20 + i);
    auto r = remove_directed_cycles(f);
    EXPECT_EQ(r.value(), f.value());
    EXPECT_TRUE(is_acyclic(r));
    EXPECT_LE(r.volume(), f.volume());
  }
}

TEST(AntiCycle, NoneOnPath) {
  EXPECT_FALSE(find_anti_directed_cycle(FlowAssignment{0, 2, {{0, 1, 1}, {1, 2, 1}}}));
}

TEST(AntiCycle, FourNodePattern) {
  auto c = find_anti_directed_cycle(four());
  ASSERT_TRUE(c);
  EXPECT_FALSE(cycle_violation(four(), *c));
  auto pin = c->p_in(), pout = c->p_out();
  std::sort(pin.begin(), pin.end());
  std::sort(pout.begin(), pout.end());
  EXPECT_EQ(pin, (std::vector<int>{0, 2}));
  EXPECT_EQ(pout, (std::vector<int>{1, 3}));
}

TEST(AntiCycle, Eliminate) {
  auto f = four();
  auto r = eliminate_cycle(f, *find_anti_directed_cycle(f));
  std::map<std::pair<int, int>, cap_t> m;
  for (auto& a : r.arcs) m[{a.u, a.v}] = a.f;
  EXPECT_EQ(m.count({0, 1}), 0u);
  EXPECT_EQ(m.count({2, 3}), 0u);
  EXPECT_EQ(m[std::pair(0, 3)], 2);
  EXPECT_EQ(m[std::pair(2, 1)], 2);
  EXPECT_EQ(totals(r), totals(f));
}

TEST(AntiCycle, DistinctValuesDropMinimum) {
  FlowAssignment f{0, 1, {{0, 1, 3}, {2, 1, 5}, {2, 3, 2}, {0, 3, 4}}};
  auto r = eliminate_cycle(f, *find_anti_directed_cycle(f));
  EXPECT_EQ(r.volume(), 3);
  for (auto& a : r.arcs) EXPECT_FALSE(a.u == 2 && a.v == 3);
  EXPECT_EQ(totals(r), totals(f));
}

TEST(AntiCycle, RejectsForeignCycle) {
  auto f = four();
  auto c = *find_anti_directed_cycle(f);
  c.arcs[0].f = 1;
  c.arcs[0].u = 9;
  EXPECT_THROW(eliminate_cycle(f, c), flow_error);
}

TEST(Sparsify, AlreadySparse) {
  FlowAssignment p{0, 2, {{0, 1, 1}, {1, 2, 1}}};
  SparsifyStats st;
  EXPECT_EQ(sparsify(p, &st).arcs, p.arcs);
  EXPECT_EQ(st.eliminations, 0);
}

TEST(Sparsify, Biclique) {
  for (int k = 2; k <= 12; ++k) {
    auto [g, f] = corpus::biclique_flow(k);
    EXPECT_FALSE(flow_violation(g, f));
    auto r = sparsify(g, f);
    EXPECT_EQ(r.value(), f.value());
    EXPECT_LE(r.volume(), 2 * g.n());
    EXPECT_LE(r.volume() - 2 * k, 4 * k);  // middle arcs
    EXPECT_TRUE(support_is_forest(r));
    EXPECT_FALSE(flow_violation(g, r));
  }
}

TEST(Sparsify, DenseRandomFlowsContainCycles) {
  for (int i = 0; i < 100; ++i) {
    auto g = corpus::random_connected(16, 0.6, 400 + i, 4);
    auto f = remove_directed_cycles(corpus::dense_flow(g, 0, 15, i));
    if (f.volume() > 2 * (int)f.support().size()) EXPECT_TRUE(find_anti_directed_cycle(f));
    auto r = sparsify(g, f);
    EXPECT_EQ(r.value(), f.value());
    EXPECT_LE(r.volume(), 2 * (int)r.support().size());
    EXPECT_TRUE(support_is_forest(r));
    EXPECT_TRUE(is_acyclic(r));
    EXPECT_FALSE(flow_violation(g, r));
    auto before = totals(f), after = totals(r);
    EXPECT_EQ(before[0], after[0]);
    EXPECT_EQ(before[15], after[15]);
  }
}

TEST(Sparsify, MaxFlowOutputs) {
  for (int i = 0; i < 200; ++i) {
    int n = 4 + i % 40;
    auto g = corpus::random_connected(n, corpus::density(i, 200), 800 + i, i % 2 ? 1 : 5);
    auto r = max_flow(g, 0, n - 1);
    auto s = sparsify(g, r.flow);
    EXPECT_EQ(s.value(), r.flow.value());
    EXPECT_LE(s.volume(), 2 * n);
    EXPECT_FALSE(flow_violation(g, s));
  }
}

TEST(Sparsify, RejectsInfeasible) {
  auto g = corpus::path(3);
  FlowAssignment f{0, 2, {{0, 1, 2}, {1, 2, 2}}};
  EXPECT_THROW(sparsify(g, f), flow_error);
}

TEST(FlowFormat, RoundTrip) {
  auto g = corpus::random_connected(10, 0.5, 3, 3);
  auto f = max_flow(g, 0, 9).flow;
  auto p = parse_flow(serialize_flow(f));
  EXPECT_EQ(p.s, f.s);
  EXPECT_EQ(p.arcs, f.arcs);
  EXPECT_THROW(parse_flow("a 0 1 1\n"), flow_error);
  EXPECT_THROW(parse_flow("flow 0 1\na 0 1 -1\n"), flow_error);
  EXPECT_THROW(parse_flow("flow 0 1\nz\n"), flow_error);
}
