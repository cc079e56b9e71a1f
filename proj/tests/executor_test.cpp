#include <gtest/gtest.h>

#include <random>

#include "hyperjoin/executor/engine.hpp"
#include "support/datalog_oracle.hpp"
#include "support/graphs.hpp"
#include "support/queries.hpp"

namespace hj = hyperjoin;
using hj::testing::Answer;

namespace {

using Decoded = std::map<std::vector<std::string>, double>;

Decoded decode(const hj::Catalog& cat, const Answer& a) {
  Decoded out;
  for (const auto& [k, v] : a) {
    std::vector<std::string> names;
    for (hj::Id id : k) names.push_back(cat.dictionary().decode(id));
    out[names] = v;
  }
  return out;
}

hj::Catalog graph_catalog(hj::Id n, const std::vector<hj::Edge>& edges) {
  hj::Catalog cat;
  hj::testing::put_graph(cat, "Edge", n, edges);
  cat.set_default_relation("Edge");
  return cat;
}

/// Non-recursive programs checked against the oracle; `node' selections name node 1.
std::vector<hj::testing::NamedQuery> join_queries() {
  std::vector<hj::testing::NamedQuery> out;
  for (const auto& q : hj::testing::benchmark_queries())
    if (q.name != "PageRank" && q.name != "SSSP") out.push_back(q);
  for (auto q : hj::testing::selection_queries()) {
    for (std::size_t p; (p = q.text.find("`node'")) != std::string::npos;) q.text.replace(p, 6, "`1'");
    out.push_back(q);
  }
  out.push_back({"BarbellCount", hj::testing::barbell_count});
  out.push_back({"CountTriangleCyclic", hj::testing::count_triangle_cyclic});
  out.push_back({"Path2Count", "P(x;c:long) :- Edge(x,y),Edge(y,z); c=<<COUNT(z)>>."});
  out.push_back({"MaxOut", "M(;c:int) :- Edge(x,y); c=<<MAX(x)>>."});
  return out;
}

void expect_matches_oracle(hj::Catalog& cat, const std::string& text, const std::string& label,
                           const hj::ExecOptions& options = {}) {
  hj::testing::DatalogOracle oracle(cat);
  Answer want = oracle.run(text);
  auto r = hj::execute(text, cat, options);
  Answer got = hj::testing::answer_of(cat, r.relation);
  ASSERT_EQ(got.size(), want.size()) << label;
  for (const auto& [k, v] : want) {
    auto it = got.find(k);
    ASSERT_NE(it, got.end()) << label;
    EXPECT_NEAR(it->second, v, 1e-9 * std::max(1.0, std::abs(v))) << label;
  }
}

std::uint64_t choose3(std::uint64_t n) { return n * (n - 1) * (n - 2) / 6; }

}  // namespace

TEST(Join, MatchesOracleOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 12; ++trial) {
    hj::Id n = std::uniform_int_distribution<hj::Id>(5, 40)(rng);
    double p = std::uniform_real_distribution<double>(0.05, 0.3)(rng);
    auto edges = trial % 2 ? hj::testing::random_digraph(rng, n, p) : hj::testing::symmetric(hj::testing::random_graph(rng, n, p));
    for (const auto& q : join_queries()) {
      hj::Catalog cat = graph_catalog(n, edges);
      expect_matches_oracle(cat, q.text, q.name + " trial " + std::to_string(trial));
    }
  }
}

TEST(Join, PlannerVariantsAgree) {
  std::mt19937_64 rng(12);
  auto edges = hj::testing::symmetric(hj::testing::random_graph(rng, 30, 0.2));
  for (const auto& q : join_queries()) {
    for (int variant = 0; variant < 4; ++variant) {
      hj::ExecOptions o;
      o.plan.ghd = variant != 1;
      o.plan.pushdown = variant != 2;
      o.plan.dedup = variant != 3;
      hj::Catalog cat = graph_catalog(30, edges);
      expect_matches_oracle(cat, q.text, q.name + " variant " + std::to_string(variant), o);
    }
  }
}

TEST(Join, TriangleCountOnPrunedCompleteGraphs) {
  for (hj::Id n = 3; n <= 20; ++n) {
    std::vector<hj::Edge> pruned;
    for (hj::Id a = 0; a < n; ++a)
      for (hj::Id b = 0; b < a; ++b) pruned.emplace_back(a, b);
    hj::Catalog cat = graph_catalog(n, pruned);
    hj::execute(hj::testing::count_triangle_cyclic, cat);
    EXPECT_EQ(hj::testing::answer_of(cat, "CountTriangle").at({}), static_cast<double>(choose3(n))) << n;
  }
}

TEST(Join, LiteralCountTriangleTextIsSumOfSquares) {
  std::vector<hj::Edge> pruned;
  for (hj::Id a = 0; a < 5; ++a)
    for (hj::Id b = 0; b < a; ++b) pruned.emplace_back(a, b);
  hj::Catalog cat = graph_catalog(5, pruned);
  hj::execute(hj::testing::benchmark_queries()[4].text, cat);
  EXPECT_EQ(hj::testing::answer_of(cat, "CountTriangle").at({}), 0.0 + 1 + 4 + 9 + 16);
}

TEST(Join, BipartiteGraphHasNoTriangles) {
  std::vector<hj::Edge> edges;
  for (hj::Id a = 0; a < 6; ++a)
    for (hj::Id b = 6; b < 12; ++b) edges.emplace_back(a, b);
  hj::Catalog cat = graph_catalog(12, hj::testing::symmetric(edges));
  hj::execute(hj::testing::count_triangle_cyclic, cat);
  EXPECT_EQ(hj::testing::answer_of(cat, "CountTriangle").at({}), 0.0);
  hj::execute("Triangle(x,y,z) :- R(x,y),S(y,z),T(x,z).", cat);
  EXPECT_EQ(cat.find("Triangle")->data.rows, 0u);
}

TEST(Join, EmptyInputs) {
  hj::Catalog cat = graph_catalog(3, {});
  hj::execute(hj::testing::count_triangle_cyclic, cat);
  EXPECT_EQ(hj::testing::answer_of(cat, "CountTriangle").at({}), 0.0);
  hj::execute("Triangle(x,y,z) :- R(x,y),S(y,z),T(x,z).", cat);
  EXPECT_EQ(cat.find("Triangle")->data.rows, 0u);
  hj::execute("M(;c:int) :- Edge(x,y); c=<<MIN(x)>>.", cat);
  EXPECT_EQ(cat.find("M")->data.rows, 0u);
}

TEST(Join, SelectionsGuardsAndRepeatedVariables) {
  hj::Catalog cat = graph_catalog(4, {{0, 1}, {1, 2}, {2, 2}, {3, 3}, {2, 0}});
  const std::vector<std::string> programs = {
      "Q(x) :- Edge(x,x).",
      "Q(y) :- Edge(`1',y).",
      "Q(y) :- Edge(`missing',y).",
      "Q(x) :- Edge(x,y),Edge(`2',`0').",
      "Q(x) :- Edge(x,y),Edge(`0',`2').",
      "Q(x,y) :- Edge(x,y),Edge(y,y).",
      "Q(;c:long) :- Edge(x,y),Edge(y,z),Edge(z,x); c=<<COUNT(*)>>.",
  };
  for (const auto& text : programs) expect_matches_oracle(cat, text, text);
  hj::execute("Q(x) :- Edge(x,x).", cat);
  Decoded loops = decode(cat, hj::testing::answer_of(cat, "Q"));
  EXPECT_EQ(loops, (Decoded{{{"2"}, 1.0}, {{"3"}, 1.0}}));
}

TEST(Join, AnnotatedAggregates) {
  hj::Catalog cat = graph_catalog(5, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
  hj::EncodedRelation w;
  w.arity = 2;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(0.5, 4.0);
  for (hj::Id a = 0; a < 5; ++a)
    for (hj::Id b = 0; b < 5; ++b)
      if ((a + b) % 2) w.add(std::vector<hj::Id>{a, b}, std::round(val(rng) * 4) / 4);
  cat.put("W", w, hj::ValueType::float_);
  const std::vector<std::string> programs = {
      "S(x;v:float) :- W(x,y); v=<<SUM(y)>>.",
      "S(x;v:float) :- W(x,y),Edge(y,z); v=<<SUM(y)>>.",
      "S(x;v:float) :- W(x,y),W(y,x); v=<<SUM(y)>>*2+1.",
      "S(x;v:float) :- W(x,y),Edge(x,y); v=<<MIN(y)>>.",
      "S(x;v:float) :- W(x,y),W(y,x); v=<<MAX(y)>>.",
      "S(x;v:long) :- W(x,y),Edge(y,z); v=<<COUNT(*)>>.",
      "N(;n:int) :- Edge(x,y); n=<<COUNT(x)>>.\nS(x;v:float) :- W(x,y); v=<<SUM(y)>>/N.",
  };
  for (const auto& text : programs) expect_matches_oracle(cat, text, text);
  // x would be projected away before the sum, leaving W's value ambiguous.
  EXPECT_THROW(hj::execute("S(;v:float) :- W(x,y); v=<<SUM(y)>>.", cat), hj::Error);

  hj::execute("S(x;v:float) :- W(x,y); v=<<SUM(y)>>.", cat);
  std::map<hj::Id, double> want;
  for (std::size_t r = 0; r < w.rows; ++r) want[w.row(r)[0]] += w.annotations[r];
  Answer got = hj::testing::answer_of(cat, "S");
  for (auto [x, s] : want) EXPECT_DOUBLE_EQ(got.at({x}), s);
}

TEST(Join, CountOfSourcesIsDistinct) {
  hj::Catalog cat = graph_catalog(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}});
  hj::execute("N(;w:int) :- Edge(x,y); w=<<COUNT(x)>>.", cat);
  EXPECT_EQ(hj::testing::answer_of(cat, "N").at({}), 2.0);
}

TEST(Join, ResultsInvariantUnderLayoutAndOrdering) {
  std::mt19937_64 rng(5);
  auto edges = hj::testing::symmetric(hj::testing::random_graph(rng, 60, 0.15));
  std::optional<Decoded> reference;
  for (auto g : {hj::Granularity::relation, hj::Granularity::set, hj::Granularity::block}) {
    for (auto kind : hj::testing::all_orderings()) {
      hj::Catalog cat = graph_catalog(60, edges);
      hj::LayoutPolicy policy;
      policy.granularity = g;
      cat.set_policy(policy);
      cat.apply_permutation(hj::order_nodes(hj::Graph::from_edges(60, edges), {kind, 9}));
      hj::execute("Triangle(x,y,z) :- R(x,y),S(y,z),T(x,z).", cat);
      Decoded got = decode(cat, hj::testing::answer_of(cat, "Triangle"));
      if (!reference) reference = got;
      EXPECT_EQ(got, *reference) << hj::to_string(g) << " " << hj::to_string(kind);
    }
  }
  EXPECT_FALSE(reference->empty());
}

TEST(Join, ResultsInvariantUnderThreadCount) {
  std::mt19937_64 rng(6);
  auto edges = hj::testing::symmetric(hj::testing::random_graph(rng, 150, 0.08));
  for (const auto& q : join_queries()) {
    if (q.name == "Barbell" || q.name == "SBarbell") continue;  // large outputs; covered by counts
    std::optional<Answer> reference;
    for (std::size_t threads : {1, 2, 8}) {
      hj::Catalog cat = graph_catalog(150, edges);
      hj::ExecOptions o;
      o.threads = threads;
      auto r = hj::execute(q.text, cat, o);
      Answer got = hj::testing::answer_of(cat, r.relation);
      if (!reference) reference = got;
      EXPECT_EQ(got, *reference) << q.name << " threads " << threads;
    }
  }
}

TEST(Join, FloatSumsBitIdenticalAcrossThreads) {
  std::mt19937_64 rng(8);
  auto edges = hj::testing::random_digraph(rng, 300, 0.05);
  hj::EncodedRelation w;
  w.arity = 1;
  std::uniform_real_distribution<double> val(0.0, 1.0);
  for (hj::Id a = 0; a < 300; ++a) w.add(std::vector<hj::Id>{a}, val(rng));
  std::optional<double> reference;
  for (std::size_t threads : {1, 2, 8}) {
    hj::Catalog cat = graph_catalog(300, edges);
    cat.put("W", w, hj::ValueType::float_);
    hj::ExecOptions o;
    o.threads = threads;
    hj::execute("S(;v:float) :- Edge(x,y),W(y); v=<<SUM(y)>>.", cat, o);
    double got = hj::testing::answer_of(cat, "S").at({});
    if (!reference) reference = got;
    EXPECT_EQ(got, *reference) << threads;
  }
}

TEST(Dedup, BarbellEvaluatesOneTriangleNode) {
  auto edges = hj::testing::disjoint_triangles_with_bridge(20);
  std::optional<Answer> reference;
  for (bool dedup : {true, false}) {
    hj::Catalog cat = graph_catalog(60, edges);
    hj::ExecOptions o;
    o.plan.dedup = dedup;
    auto r = hj::execute(hj::testing::benchmark_queries()[3].text, cat, o);
    const auto& m = r.metrics.rules.back();
    ASSERT_EQ(m.plan_nodes, 3u);
    int triangle_evals = 0;
    for (const auto& n : m.nodes)
      if (n.node != 0 && n.evaluated) ++triangle_evals;
    EXPECT_EQ(triangle_evals, dedup ? 1 : 2);
    EXPECT_EQ(m.node_evaluations, dedup ? 2u : 3u);
    Answer got = hj::testing::answer_of(cat, "Barbell");
    if (!reference) reference = got;
    EXPECT_EQ(got, *reference);
  }
  EXPECT_EQ(reference->size(), (20u * 6u + 2u) * 4u);
}

TEST(Metrics, IterationsAndIntersectionsRecorded) {
  hj::Catalog cat = graph_catalog(30, hj::testing::disjoint_triangles_with_bridge(10));
  auto r = hj::execute(hj::testing::barbell_count, cat);
  EXPECT_EQ(hj::testing::answer_of(cat, "BarbellCount").at({}), 248.0);
  EXPECT_GT(r.metrics.iterations, 0u);
  EXPECT_GT(r.metrics.intersections.calls, 0u);
  ASSERT_EQ(r.metrics.rules.size(), 1u);
  EXPECT_EQ(r.metrics.rules[0].fhw, hj::Rational(3, 2));
  EXPECT_EQ(r.metrics.rules[0].output_tuples, 1u);

  hj::ExecOptions single;
  single.plan.ghd = false;
  hj::Catalog cat2 = graph_catalog(30, hj::testing::disjoint_triangles_with_bridge(10));
  auto s = hj::execute(hj::testing::barbell_count, cat2, single);
  EXPECT_EQ(hj::testing::answer_of(cat2, "BarbellCount").at({}), 248.0);
  EXPECT_EQ(s.metrics.rules[0].plan_nodes, 1u);
  EXPECT_GT(s.metrics.iterations, r.metrics.iterations);
}

TEST(GenericJoin, PathJoinOverTwoTries) {
  hj::EncodedRelation rel;
  rel.arity = 2;
  for (auto [a, b] : std::vector<hj::Edge>{{0, 1}, {0, 2}, {1, 2}, {2, 3}}) rel.add(std::vector<hj::Id>{a, b});
  auto fwd = std::make_shared<const hj::Trie>(hj::build_trie(rel, {0, 1}, {}));
  auto rev = std::make_shared<const hj::Trie>(hj::build_trie(rel, {1, 0}, {}));
  // x -> y -> z with order y, x, z.
  hj::JoinSpec spec;
  spec.order = {1, 0, 2};
  spec.participants.push_back({rev, 0, 0, {1, 0}});
  spec.participants.push_back({fwd, 0, 0, {1, 2}});
  spec.split = 3;
  auto out = hj::generic_join(spec);
  std::set<std::vector<hj::Id>> rows;
  for (std::size_t r = 0; r < out.rows(); ++r) rows.insert({out.keys.begin() + r * 3, out.keys.begin() + r * 3 + 3});
  EXPECT_EQ(rows, (std::set<std::vector<hj::Id>>{{1, 0, 2}, {2, 0, 3}, {2, 1, 3}}));

  spec.split = 0;
  spec.semiring = hj::Semiring::count();
  auto count = hj::generic_join(spec);
  ASSERT_EQ(count.rows(), 1u);
  EXPECT_EQ(count.values[0], 3.0);
}
