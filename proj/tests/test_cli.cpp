#include <gtest/gtest.h>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "apmf/apmf_tree.hpp"
#include "apmf/cert.hpp"
#include "apmf/graph.hpp"
#include "apmf/sparsify.hpp"
#include "corpus.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out, err;
  json report() const {
    std::istringstream in(err);
    std::string line, keep;
    while (std::getline(in, line))
      if (!line.empty() && line[0] == '{') keep = line;
    return json::parse(keep);
  }
};

class Cli : public ::testing::Test {
 protected:
  fs::path dir;
  void SetUp() override {
    dir = fs::temp_directory_path() / ("apmf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string p(const std::string& name) const { return (dir / name).string(); }

  void write(const std::string& name, const std::string& text) const { std::ofstream(p(name)) << text; }
  std::string read(const std::string& name) const {
    std::ifstream in(p(name), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  Outcome run(const std::string& args) const {
    std::string err = p("stderr.txt");
    std::string cmd = std::string(APMF_CLI_PATH) + " " + args + " 2>" + err;
    FILE* f = popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf;
    std::size_t k;
    while ((k = fread(buf.data(), 1, buf.size(), f)) > 0) out.append(buf.data(), k);
    int st = pclose(f);
    return {WEXITSTATUS(st), out, read("stderr.txt")};
  }
};

const char* path3 = "p apmf 3 2\ne 0 1\ne 1 2\n";

}  // namespace

TEST_F(Cli, SolvePath) {
  write("p3.graph", path3);
  auto r = run("solve " + p("p3.graph"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0\t1\t1\n0\t2\t1\n1\t2\t1\n");
  auto one = run("solve " + p("p3.graph") + " --pairs 2-0");
  EXPECT_EQ(one.out, "2\t0\t1\n");
  write("pairs.txt", "1 2\n0 2\n");
  EXPECT_EQ(run("solve " + p("p3.graph") + " --pairs @" + p("pairs.txt")).out, "0\t2\t1\n1\t2\t1\n");
}

TEST_F(Cli, InputErrorsExitTwo) {
  write("bad.graph", "p apmf 2 1\ne 0 0\n");
  auto r = run("solve " + p("bad.graph"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.report()["exit"], 2);
  EXPECT_EQ(run("solve " + p("missing.graph")).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  write("p3.graph", path3);
  EXPECT_EQ(run("solve " + p("p3.graph") + " --pairs 0-0").code, 2);
}

TEST_F(Cli, BuildQueryMatchesSolve) {
  auto g = corpus::random_connected(30, 0.15, 12);
  write("g.graph", apmf::serialize_graph(g));
  auto solved = run("solve " + p("g.graph"));
  ASSERT_EQ(solved.code, 0);
  auto b = run("build " + p("g.graph") + " --mode lv --scale paper -o " + p("g.idx"));
  ASSERT_EQ(b.code, 0);
  EXPECT_GT(b.report()["counters"]["t_pq"].get<int>(), 0);
  EXPECT_TRUE(b.report()["counters"].contains("depth_hist"));
  // all pairs through the query command would spawn 435 processes; load the index directly
  auto idx = apmf::deserialize_index(read("g.idx"));
  std::string out;
  for (int u = 0; u < 30; ++u)
    for (int v = u + 1; v < 30; ++v) out += std::to_string(u) + "\t" + std::to_string(v) + "\t" + std::to_string(*apmf::query_value(idx, u, v)) + "\n";
  EXPECT_EQ(out, solved.out);
  for (auto [u, v] : {std::pair{0, 29}, {3, 7}, {11, 12}}) {
    auto q = run("query " + p("g.idx") + " " + std::to_string(u) + " " + std::to_string(v));
    EXPECT_EQ(q.out, std::to_string(*apmf::query_value(idx, u, v)) + "\n");
  }
}

TEST_F(Cli, BuildDeterministicAndExercise) {
  auto g = corpus::random_connected(64, 0.08, 1001);
  write("g.graph", apmf::serialize_graph(g));
  ASSERT_EQ(run("build " + p("g.graph") + " --mode mc --seed 7 -o " + p("a.idx")).code, 0);
  ASSERT_EQ(run("build " + p("g.graph") + " --mode mc --seed 7 -o " + p("b.idx")).code, 0);
  EXPECT_EQ(read("a.idx"), read("b.idx"));
  auto e = run("build " + p("g.graph") + " --mode mc --scale exercise --gamma 0.015625 -o " + p("e.idx"));
  ASSERT_EQ(e.code, 0);
  EXPECT_GE(e.report()["counters"]["depth_hist"].size(), 3u);  // depths 0,1,2
  EXPECT_EQ(run("build " + p("g.graph") + " --scale exercise --gamma 3 -o " + p("x.idx")).code, 2);
}

TEST_F(Cli, QueryPathAndErrors) {
  write("p3.graph", path3);
  ASSERT_EQ(run("build " + p("p3.graph") + " -o " + p("p3.idx")).code, 0);
  EXPECT_EQ(run("query " + p("p3.idx") + " 0 2").out, "1\n");
  EXPECT_EQ(run("query " + p("p3.idx") + " 0 2 --want separator").out, "1\n");
  write("junk.idx", "NOTANIDX");
  EXPECT_EQ(run("query " + p("junk.idx") + " 0 2").code, 2);
  ASSERT_EQ(run("build " + p("p3.graph") + " --value-only -o " + p("v.idx")).code, 0);
  EXPECT_EQ(run("query " + p("v.idx") + " 0 2").out, "1\n");
  EXPECT_EQ(run("query " + p("v.idx") + " 0 2 --want separator").code, 2);
}

TEST_F(Cli, CertRoundTripAndMutation) {
  auto g = corpus::random_connected(12, 0.3, 44);
  write("g.graph", apmf::serialize_graph(g));
  ASSERT_EQ(run("cert emit " + p("g.graph") + " " + p("c.cert")).code, 0);
  auto v = run("cert verify " + p("g.graph") + " " + p("c.cert"));
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.report()["result"]["certified"], 66);
  EXPECT_EQ(v.report()["command"], "cert verify");
  auto c = apmf::parse_certificate(read("c.cert"));
  c.pairs[5].p += 1;
  write("m.cert", apmf::serialize_certificate(c));
  auto m = run("cert verify " + p("g.graph") + " " + p("m.cert"));
  EXPECT_EQ(m.code, 1);
  EXPECT_EQ(m.report()["result"]["rejected"].size(), 1u);
  write("e.cert", "cert apmf 1\n");
  EXPECT_EQ(run("cert verify " + p("g.graph") + " " + p("e.cert")).code, 0);
  EXPECT_EQ(run("cert verify " + p("g.graph") + " " + p("c.cert") + " --sparse-only").code, 0);
  ASSERT_EQ(run("build " + p("g.graph") + " -o " + p("g.idx")).code, 0);
  ASSERT_EQ(run("cert emit " + p("g.graph") + " " + p("i.cert") + " --index " + p("g.idx")).code, 0);
  EXPECT_EQ(run("cert verify " + p("g.graph") + " " + p("i.cert")).code, 0);
}

TEST_F(Cli, Sparsify) {
  write("p3.graph", path3);
  write("f.flow", "flow 0 2\na 0 1 1\na 1 2 1\n");
  auto r = run("sparsify " + p("p3.graph") + " " + p("f.flow"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "flow 0 2\na 0 1 1\na 1 2 1\n");
  write("bad.flow", "flow 0 2\na 0 1 2\na 1 2 2\n");
  EXPECT_EQ(run("sparsify " + p("p3.graph") + " " + p("bad.flow")).code, 1);
  auto [g, f] = corpus::biclique_flow(8);
  write("b.graph", apmf::serialize_graph(g));
  write("b.flow", apmf::serialize_flow(f));
  auto s = run("sparsify " + p("b.graph") + " " + p("b.flow") + " -o " + p("o.flow"));
  ASSERT_EQ(s.code, 0);
  auto out = apmf::parse_flow(read("o.flow"));
  EXPECT_LE(out.volume(), 2 * g.n());
  EXPECT_EQ(out.value(), f.value());
}

TEST_F(Cli, Genhard) {
  auto r = run("genhard 2 2 --planted --decide --seed 3 -o " + p("h"));
  EXPECT_EQ(r.code, 0);
  auto rep = r.report();
  EXPECT_EQ(rep["result"]["decision"], "YES");
  EXPECT_TRUE(rep["result"].contains("quoted_pre_gadget"));
  EXPECT_EQ(rep["result"]["pre_gadget_nodes"], rep["result"]["own_pre_gadget"]);
  auto a = read("h.graph");
  ASSERT_EQ(run("genhard 2 2 --planted --seed 3 -o " + p("k")).code, 0);
  EXPECT_EQ(read("k.graph"), a);
  EXPECT_EQ(read("k.meta"), read("h.meta"));
  EXPECT_NE(read("h.meta").find("yes_at 7"), std::string::npos);
}

TEST_F(Cli, BenchEmptyAndNested) {
  fs::create_directories(p("empty"));
  auto e = run("bench " + p("empty"));
  EXPECT_EQ(e.code, 0);
  EXPECT_EQ(e.out, "");
  fs::create_directories(p("nested"));
  // nested corpus: each graph contains the previous one's edges
  auto base = corpus::random_connected(40, 0.0, 5);
  auto edges = base.edges();
  std::mt19937_64 rng(3);
  for (int level = 0; level < 4; ++level) {
    write("nested/g" + std::to_string(level) + ".graph", apmf::serialize_graph(apmf::UndirectedGraph(40, edges)));
    for (int k = 0; k < 60; ++k) {
      int a = int(rng() % 40), b = int(rng() % 40);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (std::find(edges.begin(), edges.end(), std::pair{a, b}) == edges.end()) edges.emplace_back(a, b);
    }
  }
  auto r = run("--threads 2 bench " + p("nested") + " --mode mc");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::vector<json> rows;
  while (std::getline(in, line)) rows.push_back(json::parse(line));
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (auto key : {"command", "config", "counters", "result", "exit"}) EXPECT_TRUE(rows[i].contains(key));
    EXPECT_EQ(rows[i]["result"]["file"], "g" + std::to_string(i) + ".graph");
    if (i) {
      EXPECT_GE(rows[i]["result"]["m"].get<int>(), rows[i - 1]["result"]["m"].get<int>());
      EXPECT_GE(rows[i]["counters"]["t_pq"].get<int>(), rows[i - 1]["counters"]["t_pq"].get<int>());
    }
  }
  // worker count must not change results; wall times differ
  auto single = run("bench " + p("nested") + " --mode mc");
  std::istringstream in1(single.out);
  for (std::size_t i = 0; std::getline(in1, line); ++i) {
    auto row = json::parse(line);
    ASSERT_LT(i, rows.size());
    EXPECT_EQ(row["result"], rows[i]["result"]);
    EXPECT_EQ(row["counters"]["t_pq"], rows[i]["counters"]["t_pq"]);
  }
}
