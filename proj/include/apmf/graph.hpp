#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace apmf {

using cap_t = std::int64_t;
inline constexpr cap_t max_capacity = std::numeric_limits<std::int32_t>::max();

struct graph_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simple connected graph with positive node capacities. Immutable once built.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;

  UndirectedGraph(int n, std::vector<std::pair<int, int>> edges, std::vector<cap_t> caps = {})
      : n_(n), edges_(std::move(edges)), cap_(std::move(caps)) {
    if (n_ < 1) throw graph_error("node count must be positive");
    if (cap_.empty()) cap_.assign(n_, 1);
    if ((int)cap_.size() != n_) throw graph_error("capacity vector has wrong length");
    for (int v = 0; v < n_; ++v) {
      if (cap_[v] < 1) throw graph_error("capacity < 1 at node " + std::to_string(v));
      if (cap_[v] > max_capacity) throw graph_error("capacity too large at node " + std::to_string(v));
    }
    for (auto& [u, v] : edges_) {
      if (u < 0 || v < 0 || u >= n_ || v >= n_)
        throw graph_error("edge endpoint out of range: " + std::to_string(u) + " " + std::to_string(v));
      if (u == v) throw graph_error("self-loop at node " + std::to_string(u));
      if (u > v) std::swap(u, v);
    }
    build_adjacency();
    if (!is_connected()) throw graph_error("graph is disconnected");
  }

  int n() const { return n_; }
  int m() const { return (int)edges_.size(); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<cap_t>& capacities() const { return cap_; }
  cap_t capacity(int v) const { return cap_[v]; }
  bool unit() const {
    return std::all_of(cap_.begin(), cap_.end(), [](cap_t c) { return c == 1; });
  }
  cap_t total_capacity() const { return std::accumulate(cap_.begin(), cap_.end(), cap_t{0}); }

  int degree(int v) const { return off_[v + 1] - off_[v]; }
  // sorted neighbor ids
  const int* nbr_begin(int v) const { return adj_.data() + off_[v]; }
  const int* nbr_end(int v) const { return adj_.data() + off_[v + 1]; }
  std::vector<int> neighbors(int v) const { return {nbr_begin(v), nbr_end(v)}; }
  bool adjacent(int u, int v) const { return std::binary_search(nbr_begin(u), nbr_end(u), v); }

  bool operator==(const UndirectedGraph& o) const {
    return n_ == o.n_ && edges_ == o.edges_ && cap_ == o.cap_;
  }

 private:
  void build_adjacency() {
    off_.assign(n_ + 1, 0);
    for (auto [u, v] : edges_) ++off_[u + 1], ++off_[v + 1];
    for (int v = 0; v < n_; ++v) off_[v + 1] += off_[v];
    adj_.assign(2 * edges_.size(), 0);
    std::vector<int> pos(off_.begin(), off_.end() - 1);
    for (auto [u, v] : edges_) adj_[pos[u]++] = v, adj_[pos[v]++] = u;
    for (int v = 0; v < n_; ++v) {
      std::sort(adj_.begin() + off_[v], adj_.begin() + off_[v + 1]);
      if (std::adjacent_find(adj_.begin() + off_[v], adj_.begin() + off_[v + 1]) != adj_.begin() + off_[v + 1])
        throw graph_error("duplicate edge at node " + std::to_string(v));
    }
  }

  bool is_connected() const {
    std::vector<char> seen(n_, 0);
    std::vector<int> st{0};
    seen[0] = 1;
    int cnt = 1;
    while (!st.empty()) {
      int v = st.back();
      st.pop_back();
      for (const int* w = nbr_begin(v); w != nbr_end(v); ++w)
        if (!seen[*w]) seen[*w] = 1, ++cnt, st.push_back(*w);
    }
    return cnt == n_;
  }

  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<cap_t> cap_;
  std::vector<int> off_, adj_;
};

struct Arc {
  int from, to;
  cap_t cap;
};

// Directed network with optional origin tags (graph node, out-copy flag).
struct DirectedNetwork {
  int n = 0;
  std::vector<Arc> arcs;
  std::vector<int> origin;      // empty if not produced by split_transform
  std::vector<char> is_out;

  void add_arc(int u, int v, cap_t c) {
    if (c <= 0) throw graph_error("zero-capacity arc");
    arcs.push_back({u, v, c});
  }
};

inline int in_node(int v) { return 2 * v; }
inline int out_node(int v) { return 2 * v + 1; }

// v -> (v_in = 2v, v_out = 2v+1). Internal arcs come first, arc id v.
inline DirectedNetwork split_transform(const UndirectedGraph& g) {
  DirectedNetwork net;
  net.n = 2 * g.n();
  net.origin.resize(net.n);
  net.is_out.resize(net.n);
  for (int v = 0; v < g.n(); ++v) {
    net.origin[in_node(v)] = net.origin[out_node(v)] = v;
    net.is_out[out_node(v)] = 1;
    net.add_arc(in_node(v), out_node(v), g.capacity(v));
  }
  for (auto [u, v] : g.edges()) {
    cap_t c = g.capacity(u) + g.capacity(v);
    net.add_arc(out_node(u), in_node(v), c);
    net.add_arc(out_node(v), in_node(u), c);
  }
  return net;
}

// Node u of capacity c becomes copies first[u] .. first[u]+c-1.
inline std::vector<int> blowup_offsets(const UndirectedGraph& g) {
  std::vector<int> first(g.n() + 1, 0);
  for (int v = 0; v < g.n(); ++v) first[v + 1] = first[v] + (int)g.capacity(v);
  return first;
}

inline UndirectedGraph unit_blowup(const UndirectedGraph& g, std::int64_t max_nodes = 1 << 22) {
  if (g.total_capacity() > max_nodes)
    throw graph_error("blowup would create " + std::to_string(g.total_capacity()) + " nodes");
  auto first = blowup_offsets(g);
  std::vector<std::pair<int, int>> edges;
  for (auto [u, v] : g.edges())
    for (int a = first[u]; a < first[u + 1]; ++a)
      for (int b = first[v]; b < first[v + 1]; ++b) edges.emplace_back(a, b);
  return UndirectedGraph(first[g.n()], std::move(edges));
}

struct IncidenceMatrix {
  int n = 0;
  std::vector<cap_t> a;  // row-major
  cap_t operator()(int u, int v) const { return a[(std::size_t)u * n + v]; }
  cap_t& operator()(int u, int v) { return a[(std::size_t)u * n + v]; }
};

inline constexpr int default_dense_budget = 4096;

inline IncidenceMatrix incidence_matrix(const UndirectedGraph& g, int budget = default_dense_budget) {
  if (g.n() > budget) throw graph_error("incidence matrix exceeds dense budget");
  IncidenceMatrix M{g.n(), std::vector<cap_t>((std::size_t)g.n() * g.n(), 0)};
  // edges of an undirected graph count as unit edge capacities here; node capacities live in the split network
  for (auto [u, v] : g.edges()) M(u, v) = M(v, u) = 1;
  return M;
}

inline IncidenceMatrix incidence_matrix(const DirectedNetwork& net, int budget = default_dense_budget) {
  if (net.n > budget) throw graph_error("incidence matrix exceeds dense budget");
  IncidenceMatrix M{net.n, std::vector<cap_t>((std::size_t)net.n * net.n, 0)};
  for (const Arc& a : net.arcs) M(a.from, a.to) += a.cap;
  return M;
}

// ---- text format ----

inline std::string serialize_graph(const UndirectedGraph& g) {
  std::ostringstream os;
  os << "p apmf " << g.n() << ' ' << g.m() << '\n';
  for (int v = 0; v < g.n(); ++v)
    if (g.capacity(v) != 1) os << "n " << v << ' ' << g.capacity(v) << '\n';
  for (auto [u, v] : g.edges()) os << "e " << u << ' ' << v << '\n';
  return os.str();
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty() || s.size() > 19) return false;
  std::size_t i = 0;
  bool neg = false;
  if (s[0] == '-') neg = true, i = 1;
  if (i == s.size()) return false;
  std::int64_t v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = neg ? -v : v;
  return true;
}

template <class F>
void for_each_line(std::string_view text, F&& f) {
  int lineno = 0;
  std::size_t i = 0;
  while (i <= text.size()) {
    std::size_t j = text.find('\n', i);
    if (j == std::string_view::npos) j = text.size();
    ++lineno;
    if (!(j == text.size() && i == j)) f(lineno, text.substr(i, j - i));
    i = j + 1;
  }
}

}  // namespace detail

inline UndirectedGraph parse_graph(std::string_view text) {
  bool header = false;
  std::int64_t n = 0, m = 0;
  std::vector<cap_t> caps;
  std::vector<std::pair<int, int>> edges;
  std::unordered_set<std::uint64_t> seen;
  auto fail = [](int line, const std::string& msg) {
    throw graph_error("line " + std::to_string(line) + ": " + msg);
  };
  int last_line = 0;
  detail::for_each_line(text, [&](int line, std::string_view raw) {
    last_line = line;
    auto tok = detail::split_ws(raw);
    if (tok.empty() || tok[0] == "c") return;
    if (tok[0] == "p") {
      if (header) fail(line, "duplicate header");
      if (tok.size() != 4 || tok[1] != "apmf" || !detail::parse_int(tok[2], n) || !detail::parse_int(tok[3], m))
        fail(line, "malformed header");
      if (n < 1 || n > (1 << 26)) fail(line, "bad node count");
      if (m < 0 || m > (std::int64_t)1 << 31) fail(line, "bad edge count");
      header = true;
      caps.assign(n, 1);
      return;
    }
    if (!header) fail(line, "record before header");
    std::int64_t a, b;
    if (tok.size() != 3 || !detail::parse_int(tok[1], a) || !detail::parse_int(tok[2], b)) fail(line, "malformed line");
    if (tok[0] == "n") {
      if (a < 0 || a >= n) fail(line, "node id out of range");
      if (b < 1) fail(line, "capacity < 1");
      if (b > max_capacity) fail(line, "capacity too large");
      caps[a] = b;
    } else if (tok[0] == "e") {
      if (a < 0 || a >= n || b < 0 || b >= n) fail(line, "node id out of range");
      if (a == b) fail(line, "self-loop");
      std::uint64_t key = (std::uint64_t)std::min(a, b) << 32 | (std::uint64_t)std::max(a, b);
      if (!seen.insert(key).second) fail(line, "duplicate edge");
      edges.emplace_back((int)a, (int)b);
    } else {
      fail(line, "malformed line");
    }
  });
  if (!header) throw graph_error("line " + std::to_string(last_line) + ": missing header");
  if ((std::int64_t)edges.size() != m)
    throw graph_error("line " + std::to_string(last_line) + ": expected " + std::to_string(m) + " edges, found " +
                      std::to_string(edges.size()));
  try {
    return UndirectedGraph((int)n, std::move(edges), std::move(caps));
  } catch (const graph_error& e) {
    throw graph_error("line " + std::to_string(last_line) + ": " + e.what());
  }
}

}  // namespace apmf
