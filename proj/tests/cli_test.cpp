#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

/// Runs the CLI with `args`, capturing stdout; stderr is discarded.
Outcome run(const std::string& args) {
  const std::string cmd = std::string(HYPERJOIN_BINARY) + " " + args + " 2>/dev/null";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::string& name) { return std::string(HYPERJOIN_QUERIES) + "/" + name; }

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() / ("hyperjoin_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, CountTriangleOnPrunedK5) {
  Outcome r = run("query -q " + q("count_triangle.q") + " --dataset " + q("data/k5.tsv") + " --ordering degree --prune");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "10\n");
}

TEST(Cli, SsspPrintsVertexDistanceRows) {
  Outcome r = run("query -q " + q("sssp.q") + " --dataset " + q("data/path.tsv") + " --symmetric --relation Source=" +
              q("data/source.tsv") + ":1");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1\t1\n2\t2\n3\t3\n");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("query -q " + q("invalid.q") + " --dataset " + q("data/k5.tsv")).code, 2);
  EXPECT_EQ(run("query -q " + q("triangle.q") + " --dataset /nonexistent/file").code, 1);
  EXPECT_EQ(run("query --no-such-flag").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("query -q " + q("triangle.q") + " --dataset " + q("data/k5.tsv") + " --layout oracle").code, 2);
  EXPECT_EQ(run("query -e 'Q(x) :- Missing(x).' --relation A=" + q("data/source.tsv") + ":1").code, 2);
  EXPECT_EQ(run("explain -q " + q("triangle.q")).code, 0);
}

TEST(Cli, LoadWritesPrunedSnapshotThatQueriesReuse) {
  fs::path dir = temp_dir();
  const std::string snap = (dir / "k5.snap").string();
  Outcome load = run("load --dataset " + q("data/k5.tsv") + " --ordering degree --prune --snapshot " + snap);
  ASSERT_EQ(load.code, 0);
  auto summary = nlohmann::json::parse(load.out);
  EXPECT_EQ(summary["relations"][0]["rows"], 10);  // 20 directed edges, src > dst kept
  Outcome r = run("query -q " + q("count_triangle.q") + " --snapshot " + snap);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "10\n");
  EXPECT_EQ(run("load --dataset /nonexistent --snapshot " + snap).code, 1);
  fs::remove_all(dir);
}

TEST(Cli, ExplainBarbell) {
  Outcome r = run("explain -q " + q("barbell.q"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("nodes 3"), std::string::npos);
  EXPECT_NE(r.out.find("width=1 "), std::string::npos);
  EXPECT_NE(r.out.find("dedup=1"), std::string::npos);
  Outcome single = run("explain -q " + q("barbell.q") + " --no-ghd --output json");
  ASSERT_EQ(single.code, 0);
  auto j = nlohmann::json::parse(single.out);
  ASSERT_EQ(j[0]["nodes"].size(), 1u);
  EXPECT_EQ(j[0]["nodes"][0]["width"], "3");
  Outcome tri = run("explain -q " + q("triangle.q") + " --output json");
  auto t = nlohmann::json::parse(tri.out);
  EXPECT_EQ(t[0]["nodes"][0]["width"], "3/2");
}

TEST(Cli, QueryOutputIsByteIdenticalAcrossRunsAndThreads) {
  const std::string base = "query -q " + q("barbell.q") + " --dataset " + q("data/k5.tsv") + " --ordering random --seed 5";
  Outcome a = run(base), b = run(base), c = run(base + " --threads 8");
  EXPECT_EQ(a.code, 0);
  EXPECT_FALSE(a.out.empty());
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  Outcome pr1 = run("query -q " + q("pagerank.q") + " --dataset " + q("data/k5.tsv") + " --output json");
  Outcome pr2 = run("query -q " + q("pagerank.q") + " --dataset " + q("data/k5.tsv") + " --output json --threads 2");
  EXPECT_EQ(pr1.out, pr2.out);
  auto j = nlohmann::json::parse(pr1.out);
  EXPECT_EQ(j["result"]["rows"].size(), 5u);
}

TEST(Cli, BenchAveragesAllButExtremes) {
  Outcome r = run("bench -q " + q("count_triangle.q") + " --dataset " + q("data/k5.tsv") + " --repeat 7");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["timings_ms"].size(), 7u);
  EXPECT_EQ(j["averaged"], 5);
  EXPECT_EQ(j["metrics"]["schema_version"], 1);
}

TEST(Cli, BenchOracleReportsEveryGranularity) {
  Outcome r = run("bench -q " + q("triangle.q") + " --dataset " + q("data/k5.tsv") + " --layout oracle --repeat 3");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  for (const char* g : {"relation", "set", "block"}) {
    EXPECT_TRUE(j["granularities"].contains(g)) << g;
    EXPECT_GE(j["oracle"]["relative_cost"][g].get<double>(), 1.0) << g;
  }
  EXPECT_GT(j["oracle"]["pairs"].get<int>(), 0);
}

TEST(Cli, BenchOnEmptyGraphHasZeroWork) {
  fs::path dir = temp_dir();
  const std::string empty = (dir / "empty.tsv").string();
  std::ofstream(empty) << "# no edges\n";
  Outcome r = run("bench -q " + q("triangle.q") + " --dataset " + empty + " --repeat 3");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["metrics"]["iterations"], 0);
  EXPECT_EQ(j["metrics"]["intersections"]["calls"], 0);
  fs::remove_all(dir);
}
