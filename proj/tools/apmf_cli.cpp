// apmf_cli: batch front end. Data goes to stdout, one JSON run report to stderr.
// Exit codes: 0 ok, 1 negative verification/decision, 2 input error, 3 build failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include "apmf/apmf_tree.hpp"
#include "apmf/cert.hpp"
#include "apmf/hardness.hpp"
#include "apmf/oracle.hpp"
#include "apmf/sparsify.hpp"

using namespace apmf;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << data)) throw input_error("cannot write " + path);
}

UndirectedGraph load_graph(const std::string& path) {
  try {
    return parse_graph(slurp(path));
  } catch (const graph_error& e) {
    throw input_error(path + ": " + e.what());
  }
}

ApmfIndex load_index(const std::string& path) {
  try {
    return deserialize_index(slurp(path));
  } catch (const apmf_error& e) {
    throw input_error(path + ": " + e.what());
  }
}

// "all", "u-v,u-v", or "@file" with one "u v" per line
std::vector<std::pair<int, int>> parse_pairs(const std::string& arg, int n) {
  std::vector<std::pair<int, int>> q;
  auto add = [&](std::int64_t u, std::int64_t v) {
    if (u < 0 || v < 0 || u >= n || v >= n || u == v) throw input_error("bad pair " + std::to_string(u) + " " + std::to_string(v));
    q.emplace_back((int)u, (int)v);
  };
  if (arg == "all") {
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) q.emplace_back(u, v);
    return q;
  }
  if (arg.empty()) return q;
  if (arg[0] == '@') {
    detail::for_each_line(slurp(arg.substr(1)), [&](int line, std::string_view raw) {
      auto tok = detail::split_ws(raw);
      if (tok.empty() || tok[0] == "c") return;
      std::int64_t u, v;
      if (tok.size() != 2 || !detail::parse_int(tok[0], u) || !detail::parse_int(tok[1], v))
        throw input_error("pairs file line " + std::to_string(line) + ": expected two ids");
      add(u, v);
    });
    return q;
  }
  std::string_view s = arg;
  while (!s.empty()) {
    auto comma = s.find(',');
    auto item = s.substr(0, comma);
    auto dash = item.find('-');
    std::int64_t u, v;
    if (dash == std::string_view::npos || !detail::parse_int(item.substr(0, dash), u) ||
        !detail::parse_int(item.substr(dash + 1), v))
      throw input_error("bad pair list item '" + std::string(item) + "'");
    add(u, v);
    s = comma == std::string_view::npos ? std::string_view{} : s.substr(comma + 1);
  }
  return q;
}

json stats_json(const CallStats& s) {
  return {{"t_pq", s.t_pq},         {"solves", s.solves},       {"t_po", s.t_po},
          {"high", s.high},         {"pivot", s.pivot},         {"reinforce", s.reinforce},
          {"deferred", s.deferred}, {"shortcut", s.shortcut},   {"failed_pivots", s.failed_pivots},
          {"exhausted", s.exhausted}, {"per_tree", s.per_tree}, {"per_stage", s.per_stage},
          {"depth_hist", s.depth_hist}};
}

struct BuildOpts {
  std::string mode = "lv", scale = "paper";
  std::uint64_t seed = 1;
  double gamma = 1.0;
  bool value_only = false;

  ApmfConfig config() const {
    ApmfConfig c;
    c.mode = mode == "mc" ? Mode::mc : Mode::lv;
    c.seed = seed;
    c.scale = scale == "exercise" ? Scale::exercise : Scale::paper;
    c.gamma = gamma;
    c.retain_cuts = !value_only;
    c.validate();
    return c;
  }
  json echo() const {
    return {{"mode", mode}, {"scale", scale}, {"gamma", gamma}, {"seed", seed}, {"value_only", value_only}};
  }
};

void add_build_opts(CLI::App* c, BuildOpts& o) {
  c->add_option("--mode", o.mode, "mc or lv")->check(CLI::IsMember({"mc", "lv"}));
  c->add_option("--seed", o.seed, "64-bit seed");
  c->add_option("--scale", o.scale, "paper or exercise")->check(CLI::IsMember({"paper", "exercise"}));
  c->add_option("--gamma", o.gamma, "exercise scale factor in (0,1]");
  c->add_flag("--value-only", o.value_only, "drop separators (value queries only)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"All-pairs max-flow toolkit"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker bound for bench")->check(CLI::PositiveNumber);

  std::string graph_file, index_file, out_file, cert_file, flow_file, pairs = "all", want = "value";
  BuildOpts bo;
  int qu = -1, qv = -1;

  auto* solve = app.add_subcommand("solve", "max-flow values for node pairs");
  solve->add_option("graph", graph_file)->required();
  solve->add_option("--pairs", pairs, "all | u-v,u-v | @file");

  auto* buildc = app.add_subcommand("build", "build an index");
  buildc->add_option("graph", graph_file)->required();
  buildc->add_option("--out,-o", out_file)->required();
  add_build_opts(buildc, bo);

  auto* query = app.add_subcommand("query", "query an index");
  query->add_option("index", index_file)->required();
  query->add_option("u", qu)->required();
  query->add_option("v", qv)->required();
  query->add_option("--want", want)->check(CLI::IsMember({"value", "separator"}));

  auto* cert = app.add_subcommand("cert", "certificates");
  cert->require_subcommand(1);
  auto* emit = cert->add_subcommand("emit", "write an honest certificate");
  emit->add_option("graph", graph_file)->required();
  emit->add_option("cert", cert_file)->required();
  emit->add_option("--pairs", pairs, "all | u-v,u-v | @file");
  emit->add_option("--index", index_file, "answer from an index instead of the oracle");
  auto* verifyc = cert->add_subcommand("verify", "verify a certificate");
  int budget = default_dense_budget;
  bool sparse_only = false;
  verifyc->add_option("graph", graph_file)->required();
  verifyc->add_option("cert", cert_file)->required();
  verifyc->add_option("--budget", budget, "dense matrix budget (split-network nodes)");
  verifyc->add_flag("--sparse-only", sparse_only);

  auto* sparsc = app.add_subcommand("sparsify", "sparsify a flow");
  sparsc->add_option("graph", graph_file)->required();
  sparsc->add_option("flow", flow_file)->required();
  sparsc->add_option("--out,-o", out_file);

  auto* gen = app.add_subcommand("genhard", "3OV reduction instance");
  int gn = 2, gd = 2;
  std::uint64_t gseed = 1;
  bool planted = false, decide = false;
  std::string prefix;
  gen->add_option("n", gn)->required()->check(CLI::Range(1, 64));
  gen->add_option("d", gd)->required()->check(CLI::Range(1, 64));
  gen->add_option("--seed", gseed);
  gen->add_flag("--planted", planted);
  gen->add_flag("--decide", decide, "run the oracle decision; exit 1 on NO");
  gen->add_option("--out,-o", prefix, "writes <prefix>.graph and <prefix>.meta")->required();

  auto* bench = app.add_subcommand("bench", "build over a corpus directory");
  std::string corpus_dir;
  int repeats = 1;
  bench->add_option("corpus", corpus_dir)->required();
  bench->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  add_build_opts(bench, bo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  using clk = std::chrono::steady_clock;
  auto t0 = clk::now();
  json report;
  auto* top = app.get_subcommands()[0];
  report["command"] = top->get_name() + (top->get_subcommands().empty() ? "" : " " + top->get_subcommands()[0]->get_name());
  report["config"] = json::object();
  report["counters"] = json::object();
  report["result"] = json::object();
  int code = 0;

  try {
    if (solve->parsed()) {
      report["config"] = {{"graph", graph_file}, {"pairs", pairs}};
      auto g = load_graph(graph_file);
      auto q = parse_pairs(pairs, g.n());
      std::sort(q.begin(), q.end());
      VertexFlowSolver solver(g);
      std::string out;
      for (auto [u, v] : q) out += std::to_string(u) + "\t" + std::to_string(v) + "\t" + std::to_string(solver.solve(u, v, false).value) + "\n";
      std::cout << out;
      report["counters"]["t_pq"] = q.size();
      report["result"] = {{"pairs", q.size()}};
    } else if (buildc->parsed()) {
      report["config"] = bo.echo();
      report["config"]["graph"] = graph_file;
      auto g = load_graph(graph_file);
      auto idx = build(g, bo.config());
      spit(out_file, serialize_index(idx));
      auto sc = space_census(idx);
      report["counters"] = stats_json(idx.stats);
      report["result"] = {{"index", out_file}, {"trees", idx.trees.size()}, {"cuts", sc.cuts}, {"payload", sc.payload()}};
    } else if (query->parsed()) {
      report["config"] = {{"index", index_file}, {"u", qu}, {"v", qv}, {"want", want}};
      auto idx = load_index(index_file);
      if (qu < 0 || qv < 0 || qu >= idx.g.n() || qv >= idx.g.n() || qu == qv) throw input_error("bad query pair");
      if (want == "value") {
        auto x = query_value(idx, qu, qv);
        if (!x) throw apmf_error("pair not resolvable from this index");
        std::cout << *x << "\n";
        report["result"] = {{"value", *x}};
      } else {
        if (!idx.cfg.retain_cuts) throw input_error("index has no separators (built with --value-only)");
        auto r = query_separator(idx, qu, qv);
        if (!r) throw apmf_error("pair not resolvable from this index");
        auto c = materialize(idx, qu, qv, *r);
        auto sep = c.separator.to_vector();
        std::string line;
        for (std::size_t i = 0; i < sep.size(); ++i) line += (i ? " " : "") + std::to_string(sep[i]);
        std::cout << line << "\n";
        report["result"] = {{"separator", sep}, {"value", r->value}};
      }
    } else if (emit->parsed()) {
      report["config"] = {{"graph", graph_file}, {"cert", cert_file}, {"source", index_file.empty() ? "oracle" : "index"}};
      auto g = load_graph(graph_file);
      auto q = parse_pairs(pairs, g.n());
      std::optional<ApmfIndex> idx;
      if (!index_file.empty()) idx = load_index(index_file);
      Certificate c = idx ? emit_certificate(g, q, &*idx) : emit_certificate(g, q);
      spit(cert_file, serialize_certificate(c));
      report["result"] = {{"pairs", c.pairs.size()}};
    } else if (verifyc->parsed()) {
      report["config"] = {{"graph", graph_file}, {"cert", cert_file}, {"budget", budget}, {"sparse_only", sparse_only}};
      auto g = load_graph(graph_file);
      Certificate c;
      try {
        c = parse_certificate(slurp(cert_file));
      } catch (const cert_error& e) {
        throw input_error(cert_file + ": " + e.what());
      }
      auto r = verify(g, c, CutOptions{!sparse_only, budget});
      json rejected = json::array();
      for (std::size_t i = 0; i < r.pairs.size(); ++i)
        if (!r.pairs[i].certified()) rejected.push_back({{"g", c.pairs[i].g}, {"reason", r.pairs[i].reason}});
      for (std::size_t i = 0; i < r.pairs.size(); ++i)
        std::cout << c.pairs[i].g << "\t" << (r.pairs[i].certified() ? "ok" : "reject") << "\n";
      report["counters"] = {{"matmul_seconds", r.matmul_seconds}, {"flow_seconds", r.flow_seconds}};
      report["result"] = {{"pairs", r.pairs.size()},  {"certified", r.certified}, {"dense", r.dense_used},
                          {"paths_agree", r.paths_agree}, {"rejected", rejected}};
      code = r.all_certified() && r.paths_agree ? 0 : 1;
    } else if (sparsc->parsed()) {
      report["config"] = {{"graph", graph_file}, {"flow", flow_file}};
      auto g = load_graph(graph_file);
      FlowAssignment f;
      try {
        f = parse_flow(slurp(flow_file));
      } catch (const flow_error& e) {
        throw input_error(flow_file + ": " + e.what());
      }
      SparsifyStats st;
      try {
        auto r = sparsify(g, f, &st);
        if (out_file.empty()) std::cout << serialize_flow(r);
        else spit(out_file, serialize_flow(r));
        report["result"] = {{"volume_before", st.volume_before}, {"volume_after", st.volume_after},
                            {"eliminations", st.eliminations}, {"value", r.value()}};
      } catch (const flow_error& e) {
        report["result"] = {{"error", e.what()}};
        code = 1;
      }
    } else if (gen->parsed()) {
      report["config"] = {{"n", gn}, {"d", gd}, {"seed", gseed}, {"planted", planted}};
      auto I = gen_3ov(gn, gd, gseed, planted);
      auto R = assemble(I);
      spit(prefix + ".graph", serialize_graph(R.graph));
      spit(prefix + ".meta", serialize_sidecar(R));
      const auto& c = R.census;
      report["result"] = {{"nodes", c.total_nodes},         {"edges", c.edges},
                          {"pre_gadget_nodes", c.blown_nodes}, {"quoted_pre_gadget", c.quoted_pre_gadget},
                          {"own_pre_gadget", c.own_pre_gadget}, {"gadget_nodes", c.gadget_nodes},
                          {"edge_constant", c.edge_constant},  {"three_ov", brute_force_3ov(I.A, I.B, I.C)}};
      if (decide) {
        DecisionTrace tr;
        bool yes = decide_via(R, OracleEngine{}, &tr) == Decision::yes;
        report["result"]["decision"] = yes ? "YES" : "NO";
        report["result"]["min_value"] = tr.min_value;
        code = yes ? 0 : 1;
      }
    } else if (bench->parsed()) {
      std::vector<fs::path> files;
      if (!fs::is_directory(corpus_dir)) throw input_error("not a directory: " + corpus_dir);
      for (auto& e : fs::directory_iterator(corpus_dir))
        if (e.is_regular_file() && e.path().extension() == ".graph") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      auto cfg = bo.config();
      std::vector<std::string> lines(files.size());
      auto job = [&](std::size_t i) {
        auto g = load_graph(files[i].string());
        for (int r = 0; r < repeats; ++r) {
          auto c = cfg;
          c.seed = cfg.seed + r;
          auto s = clk::now();
          auto idx = build(g, c);
          json row = {{"command", "bench"},
                      {"config", bo.echo()},
                      {"counters", stats_json(idx.stats)},
                      {"result", {{"file", files[i].filename().string()}, {"n", g.n()}, {"m", g.m()}, {"repeat", r}}},
                      {"exit", 0}};
          row["config"]["seed"] = c.seed;
          row["counters"]["wall_seconds"] = std::chrono::duration<double>(clk::now() - s).count();
          lines[i] += row.dump() + "\n";
        }
      };
      // bounded pool; rows are printed in file order regardless of schedule
      std::size_t next = 0;
      std::vector<std::future<void>> live;
      while (next < files.size() || !live.empty()) {
        while (next < files.size() && (int)live.size() < threads) live.push_back(std::async(std::launch::async, job, next++));
        live.front().get();
        live.erase(live.begin());
      }
      for (auto& l : lines) std::cout << l;
      report["config"] = bo.echo();
      report["config"]["threads"] = threads;
      report["config"]["repeats"] = repeats;
      report["result"] = {{"files", files.size()}};
    }
  } catch (const build_failure& e) {
    report["result"] = {{"error", e.what()}, {"tree", e.tree}, {"depth", e.depth}, {"size", e.size}};
    code = 3;
  } catch (const input_error& e) {
    report["result"] = {{"error", e.what()}};
    code = 2;
  } catch (const std::exception& e) {
    // remaining library errors are rejections of the given inputs
    report["result"] = {{"error", e.what()}};
    code = 2;
  }
  report["counters"]["wall_seconds"] = std::chrono::duration<double>(clk::now() - t0).count();
  report["exit"] = code;
  std::cerr << report.dump() << "\n";
  return code;
}
