#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "graph.hpp"
#include "maxflow.hpp"
#include "nodeset.hpp"

namespace apmf {

struct apmf_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// MC pivot retries exhausted somewhere.
struct build_failure : apmf_error {
  int tree, depth, size;
  build_failure(const std::string& msg, int tree_, int depth_, int size_)
      : apmf_error(msg), tree(tree_), depth(depth_), size(size_) {}
};

enum class Mode : std::uint8_t { mc = 0, lv = 1 };
enum class Scale : std::uint8_t { paper = 0, exercise = 1 };

inline int log2_ceil(std::int64_t n) {
  int r = 0;
  while ((std::int64_t{1} << r) < n) ++r;
  return r;
}
inline int log43_ceil(std::int64_t n) {
  if (n <= 1) return 0;
  return (int)std::ceil(std::log((double)n) / std::log(4.0 / 3.0));
}

struct ApmfConfig {
  Mode mode = Mode::lv;
  std::uint64_t seed = 1;
  Scale scale = Scale::paper;
  double gamma = 1.0;
  bool retain_cuts = true;

  double g() const { return scale == Scale::paper ? 1.0 : gamma; }
  static std::int64_t up(double x) { return std::max<std::int64_t>(1, (std::int64_t)std::ceil(x - 1e-9)); }
  static std::int64_t L(int n) { return std::max(1, log2_ceil(n)); }
  static std::int64_t L43(int n) { return std::max(1, log43_ceil(n)); }

  // u is high in V' iff alpha(u) * c_high >= |V'|
  std::int64_t c_high(int n) const { return up(g() * 20.0 * L43(n)); }
  std::int64_t c_trees_mc(int n) const { return up(g() * 4.0 * L(n)); }
  std::int64_t c_trees_lv(int n, std::int64_t k) const { return up(g() * 60.0 * k * std::pow(L(n), 3)); }
  std::int64_t c_halt(int n, std::int64_t k) const { return up(g() * 60.0 * k * std::pow(L(n), 3)); }
  std::int64_t c_majority(int n, std::int64_t k) const { return up(g() * 19.0 * k * std::pow(L(n), 3)); }
  std::int64_t c_fail(int n) const { return 4 * L(n); }
  std::int64_t c_overuse(int n) const { return 8 * L(n); }
  // large-k shortcut: k^2 * halt_factor >= alpha(V)
  double halt_factor(int n) const { return g() * 60.0 * std::pow(L(n), 3); }

  void validate() const {
    if (scale == Scale::exercise && !(gamma > 0 && gamma <= 1)) throw apmf_error("gamma must lie in (0,1]");
  }
};

struct AlphaBound {
  std::vector<cap_t> a;
  cap_t operator()(int u) const { return a[u]; }
  cap_t total() const {
    cap_t s = 0;
    for (cap_t x : a) s += x;
    return s;
  }
};

// sum of neighbour capacities: d(u) for unit graphs, and an upper bound on
// every Max-Flow(u,.) including the adjacency bonus in general
inline AlphaBound default_alpha(const UndirectedGraph& g) {
  AlphaBound al{std::vector<cap_t>(g.n(), 0)};
  for (int u = 0; u < g.n(); ++u)
    for (const int* w = g.nbr_begin(u); w != g.nbr_end(u); ++w) al.a[u] += g.capacity(*w);
  for (auto& x : al.a) x = std::max<cap_t>(x, 1);
  return al;
}

struct CallStats {
  std::int64_t t_pq = 0;   // Max-Flow requests made by the algorithm
  std::int64_t solves = 0; // distinct pairs actually solved
  std::int64_t t_po = 0;   // work units outside calls
  std::int64_t high = 0, pivot = 0, reinforce = 0, deferred = 0, shortcut = 0;
  std::int64_t failed_pivots = 0, exhausted = 0;
  std::vector<std::int64_t> per_tree, per_stage, depth_hist;
  bool operator==(const CallStats&) const = default;
};

struct StoredCut {
  VertexCut cut;  // cut.s < cut.t
  cap_t value = 0;
  bool operator==(const StoredCut&) const = default;
};

// One expansion. Arrays are aligned with `members` (sorted): label is array B,
// (rep, value, handle) is array A. rep = f(x), or x itself for an unassigned big
// node, -1 for the pivot.
struct RecTreeNode {
  int depth = 0;
  int pivot = -1;  // -1: final instance
  std::vector<int> members, label, rep, handle, child;
  std::vector<cap_t> value;
  bool leaf() const { return pivot < 0; }
  int pos(int v) const {
    auto it = std::lower_bound(members.begin(), members.end(), v);
    return it != members.end() && *it == v ? int(it - members.begin()) : -1;
  }
  bool operator==(const RecTreeNode&) const = default;
};

struct RecTree {
  std::int64_t stage = 0;
  std::vector<RecTreeNode> nodes;
  bool operator==(const RecTree&) const = default;
};

enum class StageKind : std::uint8_t { trees = 0, shortcut = 1, final_root = 2 };

struct Stage {
  std::int64_t k = 0;
  StageKind kind = StageKind::trees;
  int tree_begin = 0, tree_end = 0;
  bool operator==(const Stage&) const = default;
};

struct DirectEntry {
  cap_t value = 0;
  int handle = -1;
  bool operator==(const DirectEntry&) const = default;
};

struct StageCounters {
  std::int64_t k = 0;
  std::vector<int> terminals;
  std::vector<std::uint32_t> a, b;  // |T| x |T|, upper triangle used
};

inline std::uint64_t pair_key(int u, int v) {
  if (u > v) std::swap(u, v);
  return (std::uint64_t)u << 32 | (std::uint32_t)v;
}

struct ApmfIndex {
  ApmfConfig cfg;
  UndirectedGraph g;
  AlphaBound alpha;
  std::vector<StoredCut> cuts;
  std::vector<RecTree> trees;
  std::vector<Stage> stages;
  std::unordered_map<std::uint64_t, DirectEntry> direct;
  CallStats stats;
  std::vector<StageCounters> counters;  // build-time only, not serialized
};

// ---- reassignment ----

struct PivotCut {
  int u;
  cap_t value;
  NodeSet far;  // S'_{u,p}: u's side intersected with the instance
  int handle = -1;
};

struct Reassignment {
  std::vector<int> f;      // per member position, -1 for bottom
  std::vector<int> label;  // per member position; part 0 is the residual (holds p)
  std::vector<std::vector<int>> parts;
  NodeSet small, big;
};

inline Reassignment reassign(int p, const std::vector<int>& members, const std::vector<PivotCut>& cuts,
                             std::int64_t* work = nullptr) {
  int np = (int)members.size();
  int n = cuts.empty() ? (p + 1) : cuts[0].far.universe();
  std::vector<int> at(n, -1), pos(n, -1);
  for (int i = 0; i < np; ++i) pos[members[i]] = i;
  for (int i = 0; i < (int)cuts.size(); ++i) at[cuts[i].u] = i;
  Reassignment r;
  r.small = NodeSet(n), r.big = NodeSet(n);
  std::vector<int> order;
  for (int v : members) {
    if (v != p && 2 * cuts[at[v]].far.count() <= np) r.small.set(v), order.push_back(v);
    else r.big.set(v);
  }
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    cap_t a = cuts[at[x]].value, b = cuts[at[y]].value;
    return a != b ? a < b : x < y;
  });
  NodeSet open_small = r.small, open_big = r.big;
  r.f.assign(np, -1);
  std::int64_t w = np;
  for (int u : order) {
    cap_t vu = cuts[at[u]].value;
    cuts[at[u]].far.for_each([&](int v) {
      ++w;
      if (open_small.test(v)) {
        r.f[pos[v]] = u, open_small.reset(v);
      } else if (open_big.test(v) && v != p && cuts[at[v]].value == vu) {
        r.f[pos[v]] = u, open_big.reset(v);
      }
    });
  }
  r.label.assign(np, 0);
  r.parts.assign(1, {});
  std::vector<int> lab(n, -1);
  std::vector<char> used(n, 0);
  for (int x : r.f)
    if (x >= 0) used[x] = 1;
  for (int u : order)
    if (used[u]) lab[u] = (int)r.parts.size(), r.parts.push_back({});
  for (int i = 0; i < np; ++i) {
    int l = r.f[i] < 0 ? 0 : lab[r.f[i]];
    r.label[i] = l;
    r.parts[l].push_back(members[i]);
  }
  w += np;
  if (work) *work += w;
  return r;
}

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
inline std::uint64_t keyed(std::uint64_t seed, std::uint64_t tree, std::uint64_t depth, std::uint64_t fp,
                           std::uint64_t draw) {
  return mix64(mix64(mix64(mix64(mix64(seed) ^ tree) ^ depth) ^ fp) ^ draw);
}
inline int uniform_index(std::uint64_t r, std::size_t size) {
  return (int)(((unsigned __int128)r * size) >> 64);
}
inline std::uint64_t fingerprint(const std::vector<int>& members) {
  std::uint64_t h = 0x5bd1e995;
  for (int v : members) h = mix64(h ^ (std::uint64_t)v);
  return h;
}

// Cached Max-Flow calls; each pair is solved once as (min,max).
class PairSolver {
 public:
  struct Entry {
    cap_t value;
    int handle;
  };
  PairSolver(const UndirectedGraph& g, std::vector<StoredCut>& store, CallStats& st)
      : solver_(g), store_(&store), st_(&st) {}

  Entry get(int u, int v) {
    ++st_->t_pq;
    auto key = pair_key(u, v);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto r = solver_.solve(std::min(u, v), std::max(u, v), false);
    ++st_->solves;
    Entry e{r.value, (int)store_->size()};
    store_->push_back({std::move(r.cut), r.value});
    cache_.emplace(key, e);
    return e;
  }

 private:
  VertexFlowSolver solver_;
  std::vector<StoredCut>* store_;
  CallStats* st_;
  std::unordered_map<std::uint64_t, Entry> cache_;
};

class Builder {
 public:
  explicit Builder(ApmfIndex& idx) : idx_(idx), n_(idx.g.n()), ps_(idx.g, idx.cuts, idx.stats) {}

  void run_mc() {
    auto& cfg = idx_.cfg;
    mc_ = true;
    std::int64_t T = cfg.c_trees_mc(n_);
    Stage st{0, StageKind::trees, 0, 0};
    std::vector<int> all(n_);
    for (int v = 0; v < n_; ++v) all[v] = v;
    for (std::int64_t t = 0; t < T; ++t) {
      tree_ = (int)idx_.trees.size();
      tree_key_ = (std::uint64_t)t;
      idx_.trees.push_back({0, {}});
      std::int64_t before = idx_.stats.t_pq;
      expand(all, 0);
      idx_.stats.per_tree.push_back(idx_.stats.t_pq - before);
    }
    st.tree_end = (int)idx_.trees.size();
    idx_.stages.push_back(st);
    idx_.stats.per_stage.push_back(idx_.stats.t_pq);
  }

  void run_lv() {
    auto& cfg = idx_.cfg;
    mc_ = false;
    cap_t amax = *std::max_element(idx_.alpha.a.begin(), idx_.alpha.a.end());
    double aV = (double)idx_.alpha.total();
    int stage_no = 0;
    for (std::int64_t k = 1; k <= amax; k *= 2, ++stage_no) {
      std::vector<int> terms;
      for (int v = 0; v < n_; ++v)
        if (idx_.alpha(v) >= k) terms.push_back(v);
      if (terms.size() < 2) continue;
      std::int64_t before = idx_.stats.t_pq;
      Stage st{k, StageKind::trees, (int)idx_.trees.size(), 0};
      halt_ = cfg.c_halt(n_, k);
      if ((double)k * (double)k * cfg.halt_factor(n_) >= aV) {
        st.kind = StageKind::shortcut;
        all_pairs_direct(terms, idx_.stats.shortcut);
      } else if ((std::int64_t)terms.size() <= halt_) {
        st.kind = StageKind::final_root;
        all_pairs_direct(terms, idx_.stats.deferred);
      } else {
        StageCounters sc;
        sc.k = k, sc.terminals = terms;
        std::size_t T = terms.size();
        sc.a.assign(T * T, 0), sc.b.assign(T * T, 0);
        tpos_.assign(n_, -1);
        for (std::size_t i = 0; i < T; ++i) tpos_[terms[i]] = (int)i;
        idx_.counters.push_back(std::move(sc));
        cnt_ = &idx_.counters.back();
        uses_.assign(n_, 0);
        overuse_ = cfg.c_overuse(n_);
        std::int64_t R = cfg.c_trees_lv(n_, k);
        for (std::int64_t r = 0; r < R; ++r) {
          tree_ = (int)idx_.trees.size();
          tree_key_ = (std::uint64_t)stage_no << 40 | (std::uint64_t)r;
          idx_.trees.push_back({k, {}});
          std::int64_t b0 = idx_.stats.t_pq;
          expand(terms, 0);
          idx_.stats.per_tree.push_back(idx_.stats.t_pq - b0);
        }
        std::uint32_t thr = (std::uint32_t)std::min<std::int64_t>(k, R);
        for (std::size_t i = 0; i < T; ++i)
          for (std::size_t j = i + 1; j < T; ++j) {
            ++idx_.stats.t_po;
            if (cnt_->a[i * T + j] >= thr || cnt_->b[i * T + j] >= thr) {
              ++idx_.stats.deferred;
              record_direct(terms[i], terms[j]);
            }
          }
        cnt_ = nullptr;
      }
      st.tree_end = (int)idx_.trees.size();
      idx_.stages.push_back(st);
      idx_.stats.per_stage.push_back(idx_.stats.t_pq - before);
    }
  }

 private:
  RecTree& tree() { return idx_.trees[tree_]; }

  void record_direct(int u, int v) {
    auto e = ps_.get(u, v);
    idx_.direct[pair_key(u, v)] = {e.value, e.handle};
  }

  void all_pairs_direct(const std::vector<int>& terms, std::int64_t& cat) {
    for (std::size_t i = 0; i < terms.size(); ++i)
      for (std::size_t j = i + 1; j < terms.size(); ++j) ++cat, record_direct(terms[i], terms[j]);
  }

  void count_together(const std::vector<int>& members) {
    std::size_t T = cnt_->terminals.size();
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        int a = tpos_[members[i]], b = tpos_[members[j]];
        if (a > b) std::swap(a, b);
        ++cnt_->a[a * T + b];
        ++idx_.stats.t_po;
      }
  }

  bool try_pivot(int p, const std::vector<int>& members, const NodeSet& inst, std::vector<PivotCut>& cuts,
                 Reassignment& ra) {
    cuts.clear();
    for (int u : members) {
      if (u == p) continue;
      ++idx_.stats.pivot;
      auto e = ps_.get(p, u);
      const VertexCut& c = idx_.cuts[e.handle].cut;
      NodeSet far = c.s == u ? c.side_s : c.side_t;
      far &= inst;
      cuts.push_back({u, e.value, std::move(far), e.handle});
    }
    ra = reassign(p, members, cuts, &idx_.stats.t_po);
    return 4 * (std::int64_t)ra.small.count() >= (std::int64_t)members.size();
  }

  int expand(const std::vector<int>& members, int depth) {
    const ApmfConfig& cfg = idx_.cfg;
    int id = (int)tree().nodes.size();
    tree().nodes.push_back({});
    tree().nodes[id].depth = depth;
    tree().nodes[id].members = members;
    auto& hist = idx_.stats.depth_hist;
    if ((int)hist.size() <= depth) hist.resize(depth + 1, 0);
    ++hist[depth];
    int np = (int)members.size();
    if (!mc_ && np <= halt_) {
      count_together(members);
      return id;
    }
    if (mc_) {
      std::int64_t ch = cfg.c_high(n_);
      std::vector<int> high;
      for (int u : members)
        if (idx_.alpha(u) * ch >= np) high.push_back(u);
      for (std::size_t i = 0; i < high.size(); ++i)
        for (std::size_t j = i + 1; j < high.size(); ++j) ++idx_.stats.high, record_direct(high[i], high[j]);
    }
    NodeSet inst = NodeSet::from(n_, members);
    std::uint64_t fp = fingerprint(members);
    std::vector<PivotCut> cuts;
    Reassignment ra;
    int p = -1;
    if (mc_) {
      std::int64_t tries = cfg.c_fail(n_);
      for (std::int64_t a = 0; a < tries && p < 0; ++a) {
        int cand = members[uniform_index(keyed(cfg.seed, tree_key_, depth, fp, a), members.size())];
        if (try_pivot(cand, members, inst, cuts, ra)) p = cand;
        else ++idx_.stats.failed_pivots;
      }
      if (p < 0)
        throw build_failure("no successful pivot after " + std::to_string(tries) + " attempts (tree " +
                                std::to_string(tree_) + ", depth " + std::to_string(depth) + ", size " +
                                std::to_string(np) + ")",
                            tree_, depth, np);
    } else {
      std::vector<int> pool;
      for (int v : members)
        if (uses_[v] < overuse_) pool.push_back(v);
      std::uint64_t a = 0;
      while (!pool.empty() && p < 0) {
        int i = uniform_index(keyed(cfg.seed, tree_key_, depth, fp, a++), pool.size());
        int cand = pool[i];
        pool[i] = pool.back();
        pool.pop_back();
        if (try_pivot(cand, members, inst, cuts, ra)) p = cand;
        else ++idx_.stats.failed_pivots;
      }
      if (p < 0) {
        ++idx_.stats.exhausted;
        count_together(members);
        return id;
      }
      ++uses_[p];
    }
    std::vector<int> at(n_, -1);
    for (int i = 0; i < (int)cuts.size(); ++i) at[cuts[i].u] = i;
    {
      RecTreeNode& nd = tree().nodes[id];
      nd.pivot = p;
      nd.label = ra.label;
      nd.rep.assign(np, -1), nd.handle.assign(np, -1), nd.value.assign(np, 0);
      for (int i = 0; i < np; ++i) {
        int x = members[i];
        if (x == p) continue;
        int w = ra.f[i] >= 0 ? ra.f[i] : x;
        nd.rep[i] = w;
        nd.value[i] = cuts[at[w]].value;
        nd.handle[i] = cuts[at[w]].handle;
      }
      nd.child.assign(ra.parts.size(), -1);
    }
    if (mc_) {
      // reinforcement: Max-Flow(q,u) for q in C_{p,f(u)}
      for (int i = 0; i < np; ++i) {
        int x = members[i];
        if (x == p) continue;
        NodeSet sep = idx_.cuts[tree().nodes[id].handle[i]].cut.separator;
        sep.for_each([&](int q) { ++idx_.stats.reinforce, record_direct(q, x); });
      }
    } else {
      std::vector<std::uint64_t> cross;
      const RecTreeNode& nd = tree().nodes[id];
      for (int i = 0; i < np; ++i) {
        if (members[i] == p) continue;
        const NodeSet& sep = idx_.cuts[nd.handle[i]].cut.separator;
        sep.for_each([&](int q) {
          ++idx_.stats.t_po;
          if (!inst.test(q)) return;
          int j = nd.pos(q);
          if (nd.label[j] != nd.label[i]) cross.push_back(pair_key(members[i], q));
        });
      }
      std::sort(cross.begin(), cross.end());
      cross.erase(std::unique(cross.begin(), cross.end()), cross.end());
      std::size_t T = cnt_->terminals.size();
      for (auto key : cross) {
        int a = tpos_[key >> 32], b = tpos_[(std::uint32_t)key];
        if (a > b) std::swap(a, b);
        ++cnt_->b[a * T + b];
      }
    }
    for (int l = 0; l < (int)ra.parts.size(); ++l) {
      if (ra.parts[l].size() < 2) continue;
      int c = expand(ra.parts[l], depth + 1);
      tree().nodes[id].child[l] = c;
    }
    return id;
  }

  ApmfIndex& idx_;
  int n_;
  PairSolver ps_;
  bool mc_ = true;
  int tree_ = 0;
  std::uint64_t tree_key_ = 0;
  std::int64_t halt_ = 0, overuse_ = 0;
  std::vector<int> tpos_, uses_;
  StageCounters* cnt_ = nullptr;
};

}  // namespace detail

inline std::optional<std::string> shape_violation(const ApmfIndex& idx);

inline void finish_build(ApmfIndex& idx) {
  if (!idx.cfg.retain_cuts) {
    idx.cuts.clear();
    for (auto& t : idx.trees)
      for (auto& nd : t.nodes) std::fill(nd.handle.begin(), nd.handle.end(), -1);
    for (auto& [k, e] : idx.direct) e.handle = -1;
  }
  if (auto e = shape_violation(idx)) throw apmf_error("recursion shape violated: " + *e);
}

inline ApmfIndex make_index(const UndirectedGraph& g, const ApmfConfig& cfg, const AlphaBound& alpha) {
  cfg.validate();
  if ((int)alpha.a.size() != g.n()) throw apmf_error("alpha has wrong length");
  for (cap_t x : alpha.a)
    if (x < 1) throw apmf_error("alpha must be >= 1");
  ApmfIndex idx;
  idx.cfg = cfg, idx.g = g, idx.alpha = alpha;
  return idx;
}

inline ApmfIndex build_mc(const UndirectedGraph& g, const ApmfConfig& cfg, const AlphaBound& alpha) {
  if (cfg.mode != Mode::mc) throw apmf_error("build_mc needs mode mc");
  ApmfIndex idx = make_index(g, cfg, alpha);
  if (g.n() >= 2) detail::Builder(idx).run_mc();
  finish_build(idx);
  return idx;
}

inline ApmfIndex build_lv(const UndirectedGraph& g, const ApmfConfig& cfg, const AlphaBound& alpha) {
  if (cfg.mode != Mode::lv) throw apmf_error("build_lv needs mode lv");
  ApmfIndex idx = make_index(g, cfg, alpha);
  if (g.n() >= 2) detail::Builder(idx).run_lv();
  finish_build(idx);
  return idx;
}

inline ApmfIndex build(const UndirectedGraph& g, const ApmfConfig& cfg) {
  auto al = default_alpha(g);
  return cfg.mode == Mode::mc ? build_mc(g, cfg, al) : build_lv(g, cfg, al);
}

// ---- invariants ----

inline std::optional<std::string> shape_violation(const ApmfIndex& idx) {
  int n = idx.g.n();
  int bound = log43_ceil(n);
  for (std::size_t t = 0; t < idx.trees.size(); ++t) {
    const auto& nodes = idx.trees[t].nodes;
    std::vector<NodeSet> level;
    auto where = " in tree " + std::to_string(t);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& nd = nodes[i];
      if (nd.depth > bound) return "depth " + std::to_string(nd.depth) + " exceeds " + std::to_string(bound) + where;
      if ((int)level.size() <= nd.depth) level.resize(nd.depth + 1, NodeSet(n));
      for (int v : nd.members) {
        if (v < 0 || v >= n) return "member out of range" + where;
        if (level[nd.depth].test(v)) return "instances overlap at depth " + std::to_string(nd.depth) + where;
        level[nd.depth].set(v);
      }
      if (!std::is_sorted(nd.members.begin(), nd.members.end())) return "unsorted instance" + where;
      if (nd.leaf()) continue;
      std::size_t np = nd.members.size();
      if (nd.label.size() != np || nd.rep.size() != np || nd.value.size() != np || nd.handle.size() != np)
        return "array length mismatch" + where;
      std::vector<std::vector<int>> parts(nd.child.size());
      for (std::size_t j = 0; j < np; ++j) {
        if (nd.label[j] < 0 || nd.label[j] >= (int)parts.size()) return "bad part label" + where;
        parts[nd.label[j]].push_back(nd.members[j]);
      }
      for (std::size_t l = 0; l < parts.size(); ++l) {
        if (4 * parts[l].size() > 3 * np) return "part larger than 3/4 of its instance" + where;
        int c = nd.child[l];
        if (parts[l].size() >= 2) {
          if (c < 0 || c >= (int)nodes.size()) return "missing child" + where;
          if (nodes[c].members != parts[l]) return "child instance differs from its part" + where;
          if (nodes[c].depth != nd.depth + 1) return "child depth mismatch" + where;
        } else if (c >= 0) {
          return "child on a singleton part" + where;
        }
      }
    }
  }
  return std::nullopt;
}

inline std::optional<std::string> stored_cut_violation(const ApmfIndex& idx) {
  for (std::size_t h = 0; h < idx.cuts.size(); ++h) {
    const auto& sc = idx.cuts[h];
    if (auto e = cut_violation(idx.g, sc.cut)) return "cut " + std::to_string(h) + ": " + *e;
    int bonus = idx.g.adjacent(sc.cut.s, sc.cut.t) ? 1 : 0;
    if (sc.value != sc.cut.capacity + bonus) return "cut " + std::to_string(h) + ": value mismatch";
  }
  return std::nullopt;
}

// ---- queries ----

struct SeparatorRef {
  int handle = -1;  // into idx.cuts
  int extra = -1;   // node moved into the separator (adjacent pivot pair repair)
  cap_t value = 0;
  bool direct = false;
};

namespace detail {

// value of candidate cut (p,w) for the pair (x,y); x lies on w's side
inline std::optional<SeparatorRef> candidate(const ApmfIndex& idx, const RecTreeNode& nd, int i, int y,
                                             bool check_sides) {
  int x = nd.members[i], w = nd.rep[i], p = nd.pivot;
  if (w < 0) return std::nullopt;
  SeparatorRef r{nd.handle[i], -1, nd.value[i], false};
  if (check_sides) {
    const VertexCut& c = idx.cuts[nd.handle[i]].cut;
    const NodeSet& pside = c.s == p ? c.side_s : c.side_t;
    const NodeSet& wside = c.s == p ? c.side_t : c.side_s;
    if (!(wside.test(x) && pside.test(y))) return std::nullopt;
  }
  bool same = (x == w && y == p) || (x == p && y == w);
  if (same || !idx.g.adjacent(p, w)) return r;
  cap_t base = nd.value[i] - 1;
  cap_t best = -1;
  if (p != x && p != y) best = idx.g.capacity(p), r.extra = p;
  if (w != x && w != y && (best < 0 || idx.g.capacity(w) < best)) best = idx.g.capacity(w), r.extra = w;
  r.value = base + best;
  return r;
}

// answer of one tree: none if u,v share a final instance or no candidate applies
inline std::optional<SeparatorRef> tree_answer(const ApmfIndex& idx, const RecTree& t, int u, int v,
                                               bool check_sides, bool* together = nullptr) {
  if (together) *together = false;
  if (t.nodes.empty()) return std::nullopt;
  int id = 0;
  for (;;) {
    const RecTreeNode& nd = t.nodes[id];
    int iu = nd.pos(u), iv = nd.pos(v);
    if (iu < 0 || iv < 0) return std::nullopt;
    if (nd.leaf()) {
      if (together) *together = true;
      return std::nullopt;
    }
    if (nd.label[iu] == nd.label[iv]) {
      id = nd.child[nd.label[iu]];
      if (id < 0) return std::nullopt;
      continue;
    }
    auto a = candidate(idx, nd, iu, v, check_sides);
    auto b = candidate(idx, nd, iv, u, check_sides);
    if (a && (!b || a->value <= b->value)) return a;
    return b;
  }
}

inline bool stage_covers(const ApmfIndex& idx, const Stage& st, int u, int v) {
  return idx.alpha(u) >= st.k && idx.alpha(v) >= st.k;
}

}  // namespace detail

inline void check_pair(const ApmfIndex& idx, int u, int v) {
  if (u < 0 || v < 0 || u >= idx.g.n() || v >= idx.g.n()) throw apmf_error("node id out of range");
  if (u == v) throw apmf_error("query needs two distinct nodes");
}

// Minimum separating candidate over the direct table and all trees.
inline std::optional<SeparatorRef> query_separator(const ApmfIndex& idx, int u, int v) {
  check_pair(idx, u, v);
  if (!idx.cfg.retain_cuts) throw apmf_error("index was built without cut retention");
  auto it = idx.direct.find(pair_key(u, v));
  if (it != idx.direct.end()) return SeparatorRef{it->second.handle, -1, it->second.value, true};
  std::optional<SeparatorRef> best;
  for (const Stage& st : idx.stages) {
    if (!detail::stage_covers(idx, st, u, v)) continue;
    for (int t = st.tree_begin; t < st.tree_end; ++t) {
      auto a = detail::tree_answer(idx, idx.trees[t], u, v, true);
      if (a && (!best || a->value < best->value)) best = a;
    }
  }
  return best;
}

// The separator as a VertexCut of G with s = u, t = v.
inline VertexCut materialize(const ApmfIndex& idx, int u, int v, const SeparatorRef& r) {
  if (r.handle < 0 || r.handle >= (int)idx.cuts.size()) throw apmf_error("separator handle not available");
  const VertexCut& c = idx.cuts[r.handle].cut;
  VertexCut out;
  out.s = u, out.t = v;
  out.separator = c.separator;
  bool flip = !c.side_s.test(u);
  out.side_s = flip ? c.side_t : c.side_s;
  out.side_t = flip ? c.side_s : c.side_t;
  if (r.extra >= 0) {
    out.side_s.reset(r.extra), out.side_t.reset(r.extra);
    out.separator.set(r.extra);
  }
  out.capacity = 0;
  out.separator.for_each([&](int x) { out.capacity += idx.g.capacity(x); });
  return out;
}

inline std::optional<cap_t> query_value(const ApmfIndex& idx, int u, int v) {
  check_pair(idx, u, v);
  auto it = idx.direct.find(pair_key(u, v));
  if (it != idx.direct.end()) return it->second.value;
  if (idx.cfg.retain_cuts) {
    auto r = query_separator(idx, u, v);
    if (!r) return std::nullopt;
    return r->value;
  }
  if (idx.cfg.mode == Mode::mc) {
    std::optional<cap_t> best;
    for (const RecTree& t : idx.trees) {
      auto a = detail::tree_answer(idx, t, u, v, false);
      if (a && (!best || a->value < *best)) best = a->value;
    }
    return best;
  }
  std::optional<cap_t> in_range, any;
  for (const Stage& st : idx.stages) {
    if (!detail::stage_covers(idx, st, u, v) || st.tree_begin == st.tree_end) continue;
    std::vector<cap_t> answers;
    for (int t = st.tree_begin; t < st.tree_end; ++t) {
      bool together = false;
      auto a = detail::tree_answer(idx, idx.trees[t], u, v, false, &together);
      if (a && !together) answers.push_back(a->value);
    }
    if (answers.empty()) continue;
    std::sort(answers.begin(), answers.end());
    answers.resize(std::min<std::size_t>(answers.size(), idx.cfg.c_majority(idx.g.n(), st.k)));
    cap_t maj = answers[0];
    std::size_t best_run = 0;
    for (std::size_t i = 0; i < answers.size();) {
      std::size_t j = i;
      while (j < answers.size() && answers[j] == answers[i]) ++j;
      if (j - i > best_run) best_run = j - i, maj = answers[i];
      i = j;
    }
    if (!any || maj < *any) any = maj;
    if (maj >= st.k && maj < 2 * st.k && !in_range) in_range = maj;
  }
  return in_range ? in_range : any;
}

// ---- space census ----

struct SpaceCensus {
  std::int64_t cuts = 0, separator_entries = 0, side_entries = 0, tree_entries = 0, direct_entries = 0;
  std::int64_t payload() const { return separator_entries + side_entries + tree_entries + direct_entries; }
};

inline SpaceCensus space_census(const ApmfIndex& idx) {
  SpaceCensus c;
  c.cuts = (std::int64_t)idx.cuts.size();
  for (const auto& sc : idx.cuts) {
    c.separator_entries += sc.cut.separator.count();
    c.side_entries += std::min(sc.cut.side_s.count(), sc.cut.side_t.count());
  }
  for (const auto& t : idx.trees)
    for (const auto& nd : t.nodes) c.tree_entries += (std::int64_t)nd.members.size() * (nd.leaf() ? 1 : 3);
  c.direct_entries = (std::int64_t)idx.direct.size();
  return c;
}

// ---- binary container ----

inline constexpr char index_magic[8] = {'A', 'P', 'M', 'F', 'I', 'D', 'X', '\0'};
inline constexpr std::uint32_t index_version = 1;

namespace detail {

struct Writer {
  std::string out;
  template <class T>
  void put(T x) {
    char b[sizeof(T)];
    std::memcpy(b, &x, sizeof(T));
    out.append(b, sizeof(T));
  }
  void str(const std::string& s) {
    put<std::uint64_t>(s.size());
    out += s;
  }
  template <class T>
  void vec(const std::vector<T>& v) {
    put<std::uint64_t>(v.size());
    for (const T& x : v) put<T>(x);
  }
  void set(const NodeSet& s) {
    put<std::int32_t>(s.universe());
    vec(s.words());
  }
  void tag(const char* t) { out.append(t, 4); }
};

struct Reader {
  std::string_view in;
  std::size_t at = 0;
  void need(std::size_t k) {
    if (in.size() - at < k) throw apmf_error("index file truncated");
  }
  template <class T>
  T get() {
    need(sizeof(T));
    T x;
    std::memcpy(&x, in.data() + at, sizeof(T));
    at += sizeof(T);
    return x;
  }
  std::size_t len(std::size_t elem) {
    auto k = get<std::uint64_t>();
    if (elem && k > (in.size() - at) / elem) throw apmf_error("index file truncated");
    return (std::size_t)k;
  }
  std::string str() {
    std::size_t k = len(1);
    std::string s(in.substr(at, k));
    at += k;
    return s;
  }
  template <class T>
  std::vector<T> vec() {
    std::size_t k = len(sizeof(T));
    std::vector<T> v(k);
    for (auto& x : v) x = get<T>();
    return v;
  }
  NodeSet set(int n) {
    int u = get<std::int32_t>();
    if (u != n) throw apmf_error("node set universe mismatch");
    NodeSet s(u);
    auto w = vec<std::uint64_t>();
    if (w.size() != s.words().size()) throw apmf_error("node set length mismatch");
    s.words() = std::move(w);
    return s;
  }
  void tag(const char* t) {
    need(4);
    if (in.substr(at, 4) != std::string_view(t, 4)) throw apmf_error(std::string("missing section ") + t);
    at += 4;
  }
};

}  // namespace detail

inline std::string serialize_index(const ApmfIndex& idx) {
  detail::Writer w;
  w.out.append(index_magic, 8);
  w.put<std::uint32_t>(index_version);
  w.tag("HEAD");
  w.put<std::uint8_t>((std::uint8_t)idx.cfg.mode);
  w.put<std::uint8_t>((std::uint8_t)idx.cfg.scale);
  w.put<std::uint8_t>(idx.cfg.retain_cuts);
  w.put<std::uint64_t>(idx.cfg.seed);
  w.put<double>(idx.cfg.gamma);
  w.str(serialize_graph(idx.g));
  w.vec(idx.alpha.a);
  w.tag("CUTS");
  w.put<std::uint64_t>(idx.cuts.size());
  for (const auto& sc : idx.cuts) {
    w.put<std::int32_t>(sc.cut.s), w.put<std::int32_t>(sc.cut.t);
    w.put<std::int64_t>(sc.cut.capacity), w.put<std::int64_t>(sc.value);
    w.set(sc.cut.side_s), w.set(sc.cut.separator), w.set(sc.cut.side_t);
  }
  w.tag("TREE");
  w.put<std::uint64_t>(idx.stages.size());
  for (const auto& st : idx.stages) {
    w.put<std::int64_t>(st.k), w.put<std::uint8_t>((std::uint8_t)st.kind);
    w.put<std::int32_t>(st.tree_begin), w.put<std::int32_t>(st.tree_end);
  }
  w.put<std::uint64_t>(idx.trees.size());
  for (const auto& t : idx.trees) {
    w.put<std::int64_t>(t.stage);
    w.put<std::uint64_t>(t.nodes.size());
    for (const auto& nd : t.nodes) {
      w.put<std::int32_t>(nd.depth), w.put<std::int32_t>(nd.pivot);
      w.vec(nd.members), w.vec(nd.label), w.vec(nd.rep), w.vec(nd.handle), w.vec(nd.child), w.vec(nd.value);
    }
  }
  w.tag("DIRC");
  std::vector<std::pair<std::uint64_t, DirectEntry>> d(idx.direct.begin(), idx.direct.end());
  std::sort(d.begin(), d.end(), [](auto& a, auto& b) { return a.first < b.first; });
  w.put<std::uint64_t>(d.size());
  for (auto& [k, e] : d) w.put<std::uint64_t>(k), w.put<std::int64_t>(e.value), w.put<std::int32_t>(e.handle);
  w.tag("STAT");
  const CallStats& s = idx.stats;
  for (std::int64_t x : {s.t_pq, s.solves, s.t_po, s.high, s.pivot, s.reinforce, s.deferred, s.shortcut,
                         s.failed_pivots, s.exhausted})
    w.put<std::int64_t>(x);
  w.vec(s.per_tree), w.vec(s.per_stage), w.vec(s.depth_hist);
  w.tag("END.");
  return w.out;
}

inline ApmfIndex deserialize_index(std::string_view bytes) {
  detail::Reader r{bytes};
  r.need(8);
  if (bytes.substr(0, 8) != std::string_view(index_magic, 8)) throw apmf_error("bad index magic");
  r.at = 8;
  if (r.get<std::uint32_t>() != index_version) throw apmf_error("unsupported index version");
  ApmfIndex idx;
  r.tag("HEAD");
  auto mode = r.get<std::uint8_t>(), scale = r.get<std::uint8_t>(), retain = r.get<std::uint8_t>();
  if (mode > 1 || scale > 1 || retain > 1) throw apmf_error("bad index header");
  idx.cfg.mode = (Mode)mode, idx.cfg.scale = (Scale)scale, idx.cfg.retain_cuts = retain;
  idx.cfg.seed = r.get<std::uint64_t>();
  idx.cfg.gamma = r.get<double>();
  try {
    idx.g = parse_graph(r.str());
  } catch (const graph_error& e) {
    throw apmf_error(std::string("embedded graph: ") + e.what());
  }
  int n = idx.g.n();
  idx.alpha.a = r.vec<cap_t>();
  if ((int)idx.alpha.a.size() != n) throw apmf_error("alpha length mismatch");
  r.tag("CUTS");
  std::size_t nc = r.len(24);
  idx.cuts.resize(nc);
  for (auto& sc : idx.cuts) {
    sc.cut.s = r.get<std::int32_t>(), sc.cut.t = r.get<std::int32_t>();
    sc.cut.capacity = r.get<std::int64_t>(), sc.value = r.get<std::int64_t>();
    sc.cut.side_s = r.set(n), sc.cut.separator = r.set(n), sc.cut.side_t = r.set(n);
  }
  r.tag("TREE");
  idx.stages.resize(r.len(17));
  for (auto& st : idx.stages) {
    st.k = r.get<std::int64_t>();
    auto kind = r.get<std::uint8_t>();
    if (kind > 2) throw apmf_error("bad stage kind");
    st.kind = (StageKind)kind;
    st.tree_begin = r.get<std::int32_t>(), st.tree_end = r.get<std::int32_t>();
  }
  idx.trees.resize(r.len(16));
  for (auto& t : idx.trees) {
    t.stage = r.get<std::int64_t>();
    t.nodes.resize(r.len(8));
    for (auto& nd : t.nodes) {
      nd.depth = r.get<std::int32_t>(), nd.pivot = r.get<std::int32_t>();
      nd.members = r.vec<int>(), nd.label = r.vec<int>(), nd.rep = r.vec<int>();
      nd.handle = r.vec<int>(), nd.child = r.vec<int>(), nd.value = r.vec<cap_t>();
    }
  }
  for (auto& st : idx.stages)
    if (st.tree_begin < 0 || st.tree_end < st.tree_begin || st.tree_end > (int)idx.trees.size())
      throw apmf_error("bad stage tree range");
  r.tag("DIRC");
  std::size_t nd = r.len(20);
  for (std::size_t i = 0; i < nd; ++i) {
    auto k = r.get<std::uint64_t>();
    DirectEntry e;
    e.value = r.get<std::int64_t>(), e.handle = r.get<std::int32_t>();
    if (e.handle >= (int)nc) throw apmf_error("direct entry handle out of range");
    idx.direct.emplace(k, e);
  }
  r.tag("STAT");
  CallStats& s = idx.stats;
  for (std::int64_t* x : {&s.t_pq, &s.solves, &s.t_po, &s.high, &s.pivot, &s.reinforce, &s.deferred, &s.shortcut,
                          &s.failed_pivots, &s.exhausted})
    *x = r.get<std::int64_t>();
  s.per_tree = r.vec<std::int64_t>(), s.per_stage = r.vec<std::int64_t>(), s.depth_hist = r.vec<std::int64_t>();
  r.tag("END.");
  if (r.at != bytes.size()) throw apmf_error("trailing bytes after index");
  // structural sanity so queries cannot index out of bounds
  for (auto& t : idx.trees)
    for (std::size_t id = 0; id < t.nodes.size(); ++id) {
      auto& x = t.nodes[id];
      std::size_t np = x.members.size();
      for (int v : x.members)
        if (v < 0 || v >= n) throw apmf_error("tree member out of range");
      if (x.leaf()) continue;
      if (x.label.size() != np || x.rep.size() != np || x.handle.size() != np || x.value.size() != np)
        throw apmf_error("tree arrays inconsistent");
      for (int l : x.label)
        if (l < 0 || l >= (int)x.child.size()) throw apmf_error("tree label out of range");
      for (int c : x.child)
        if (c >= (int)t.nodes.size() || (c >= 0 && c <= (int)id)) throw apmf_error("tree child out of range");
      for (int h : x.handle)
        if (h >= (int)nc) throw apmf_error("tree handle out of range");
      for (int w : x.rep)
        if (w >= n) throw apmf_error("tree rep out of range");
      if (x.pivot >= n) throw apmf_error("pivot out of range");
    }
  return idx;
}

}  // namespace apmf
