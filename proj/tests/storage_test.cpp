#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "hyperjoin/storage/catalog.hpp"
#include "hyperjoin/storage/snapshot.hpp"
#include "support/graphs.hpp"

namespace hj = hyperjoin;
using hj::Id;

namespace {

hj::EncodedRelation binary(std::initializer_list<std::pair<Id, Id>> rows) {
  hj::EncodedRelation rel;
  rel.arity = 2;
  for (auto [a, b] : rows) rel.add(std::vector<Id>{a, b});
  return rel;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("hyperjoin_storage_" + name)).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

bool is_bijection(const std::vector<Id>& perm) {
  std::vector<bool> seen(perm.size(), false);
  for (Id v : perm) {
    if (v >= perm.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

}  // namespace

TEST(LoadRelation, ParsesRowsAndSkipsComments) {
  std::istringstream in("# header\n0 1\n1\t2\n\n");
  auto rel = hj::parse_relation(in, 2, "mem");
  ASSERT_EQ(rel.rows.size(), 2u);
  EXPECT_EQ(rel.rows[1][0], "1");
  EXPECT_EQ(rel.rows[1][1], "2");
}

TEST(LoadRelation, RowArityMismatchCarriesLine) {
  std::istringstream in("0 1\n0 1 2\n");
  try {
    hj::parse_relation(in, 2, "mem");
    FAIL();
  } catch (const hj::Error& e) {
    EXPECT_EQ(e.kind(), hj::ErrorKind::row_arity_mismatch);
    EXPECT_NE(std::string(e.what()).find("mem:2"), std::string::npos);
  }
}

TEST(LoadRelation, OptionalAnnotationColumn) {
  std::istringstream in("0 1 0.5\n1 2 2\n");
  hj::LoadOptions opt;
  opt.allow_annotation = true;
  auto rel = hj::parse_relation(in, 2, "mem", opt);
  ASSERT_TRUE(rel.has_annotation_column);
  EXPECT_DOUBLE_EQ(rel.annotations[0], 0.5);
  EXPECT_DOUBLE_EQ(rel.annotations[1], 2.0);
}

TEST(LoadRelation, MissingFileIsIoError) {
  try {
    hj::load_relation("/nonexistent/file.tsv", 2);
    FAIL();
  } catch (const hj::Error& e) {
    EXPECT_EQ(e.kind(), hj::ErrorKind::io);
  }
}

TEST(Dictionary, FirstSeenOrderAndPermutation) {
  std::vector<std::string> values{"c", "a", "c", "b"};
  auto dict = hj::build_dictionary(values);
  EXPECT_EQ(*dict.find("c"), 0u);
  EXPECT_EQ(*dict.find("a"), 1u);
  EXPECT_EQ(*dict.find("b"), 2u);
  std::vector<Id> reverse{2, 1, 0};
  auto reordered = hj::build_dictionary(values, std::span<const Id>(reverse));
  EXPECT_EQ(*reordered.find("c"), 2u);
  EXPECT_EQ(*reordered.find("a"), 1u);
  EXPECT_EQ(*reordered.find("b"), 0u);
  EXPECT_EQ(reordered.decode(0), "b");
  std::vector<std::string> two{"x", "y", "x"};
  EXPECT_EQ(hj::build_dictionary(two).values().size(), 2u);
}

TEST(Ordering, DegreePutsStarCenterFirst) {
  auto g = hj::Graph::from_edges(5, {{1, 0}, {1, 2}, {1, 3}, {1, 4}});
  auto perm = hj::order_nodes(g, {hj::OrderingKind::degree});
  EXPECT_EQ(perm[1], 0u);
}

TEST(Ordering, BfsStartsAtHighestDegree) {
  auto g = hj::Graph::from_edges(3, {{0, 1}, {1, 2}});
  auto perm = hj::order_nodes(g, {hj::OrderingKind::bfs});
  EXPECT_EQ(perm[1], 0u);
  EXPECT_EQ(perm[0], 1u);
  EXPECT_EQ(perm[2], 2u);
}

TEST(Ordering, BfsRestartsPerComponent) {
  auto g = hj::Graph::from_edges(5, {{0, 1}, {3, 4}, {3, 2}});
  auto perm = hj::order_nodes(g, {hj::OrderingKind::bfs});
  EXPECT_EQ(perm[3], 0u);  // degree 2
  EXPECT_EQ(perm[2], 1u);
  EXPECT_EQ(perm[4], 2u);
  EXPECT_EQ(perm[0], 3u);
  EXPECT_EQ(perm[1], 4u);
}

TEST(Ordering, RevDegreeAndHybrid) {
  auto g = hj::Graph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}});
  auto rev = hj::order_nodes(g, {hj::OrderingKind::rev_degree});
  EXPECT_EQ(rev[3], 0u);
  EXPECT_EQ(rev[0], 3u);
  auto hybrid = hj::order_nodes(g, {hj::OrderingKind::hybrid});
  EXPECT_EQ(hybrid[0], 0u);
  // Degree-2 nodes keep their breadth-first relative order (1 before 2).
  EXPECT_EQ(hybrid[1], 1u);
  EXPECT_EQ(hybrid[2], 2u);
  EXPECT_EQ(hybrid[3], 3u);
}

TEST(Ordering, StrongRunsLabelsNeighboursConsecutively) {
  auto g = hj::Graph::from_edges(6, {{2, 0}, {2, 4}, {2, 5}, {1, 3}});
  auto perm = hj::order_nodes(g, {hj::OrderingKind::strong_runs});
  EXPECT_EQ(perm[2], 0u);
  EXPECT_EQ(perm[0], 1u);
  EXPECT_EQ(perm[4], 2u);
  EXPECT_EQ(perm[5], 3u);
  EXPECT_EQ(perm[1], 4u);
  EXPECT_EQ(perm[3], 5u);
}

TEST(Ordering, AllStrategiesAreBijections) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    auto edges = hj::testing::random_graph(rng, 60, 0.08);
    auto g = hj::Graph::from_edges(60, edges);
    for (auto kind : hj::testing::all_orderings()) {
      auto perm = hj::order_nodes(g, {kind, 42});
      ASSERT_TRUE(is_bijection(perm)) << hj::to_string(kind);
      ASSERT_EQ(perm.size(), 60u);
    }
  }
}

TEST(Ordering, RandomIsSeeded) {
  auto g = hj::Graph::from_edges(30, {});
  EXPECT_EQ(hj::order_nodes(g, {hj::OrderingKind::random, 5}), hj::order_nodes(g, {hj::OrderingKind::random, 5}));
  EXPECT_NE(hj::order_nodes(g, {hj::OrderingKind::random, 5}), hj::order_nodes(g, {hj::OrderingKind::random, 6}));
}

TEST(Prune, KeepsSrcGreaterThanDst) {
  std::vector<hj::Edge> edges{{0, 1}, {1, 0}, {2, 1}, {1, 2}};
  EXPECT_EQ(hj::prune_symmetric(edges), (std::vector<hj::Edge>{{1, 0}, {2, 1}}));
  EXPECT_TRUE(hj::prune_symmetric({}).empty());
  std::vector<hj::Edge> k3{{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}};
  EXPECT_EQ(hj::prune_symmetric(k3).size(), 3u);
}

TEST(Prune, SymmetricClosureRestoresInput) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto edges = hj::testing::symmetric(hj::testing::random_graph(rng, 40, 0.1));
    std::set<hj::Edge> original(edges.begin(), edges.end());
    std::set<hj::Edge> closed;
    for (auto [s, d] : hj::prune_symmetric(edges)) {
      closed.insert({s, d});
      closed.insert({d, s});
    }
    for (auto e : original) if (e.first == e.second) closed.insert(e);
    EXPECT_EQ(closed, original);
  }
}

TEST(DensitySkew, Examples) {
  EXPECT_THROW(hj::density_skew(std::vector<std::uint64_t>{3, 3, 3}), hj::Error);
  EXPECT_NEAR(hj::density_skew(std::vector<std::uint64_t>{1, 1, 4}), 3.0 / std::sqrt(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(hj::density_skew(std::vector<std::uint64_t>{1, 2, 2, 3}), 0.0);
  try {
    hj::density_skew(std::vector<std::uint64_t>{2, 2});
  } catch (const hj::Error& e) {
    EXPECT_EQ(e.kind(), hj::ErrorKind::degenerate_distribution);
  }
}

TEST(Trie, BuildBothOrders) {
  auto rel = binary({{1, 5}, {1, 7}, {2, 5}});
  auto t = hj::build_trie(rel, {0, 1});
  EXPECT_EQ(t.lookup({}).decode(), (std::vector<Id>{1, 2}));
  EXPECT_EQ(t.lookup(std::vector<Id>{1}).decode(), (std::vector<Id>{5, 7}));
  EXPECT_EQ(t.lookup(std::vector<Id>{2}).decode(), (std::vector<Id>{5}));
  EXPECT_TRUE(t.lookup(std::vector<Id>{9}).empty());
  auto r = hj::build_trie(rel, {1, 0});
  EXPECT_EQ(r.lookup({}).decode(), (std::vector<Id>{5, 7}));
  EXPECT_EQ(r.lookup(std::vector<Id>{5}).decode(), (std::vector<Id>{1, 2}));
  EXPECT_EQ(r.lookup(std::vector<Id>{7}).decode(), (std::vector<Id>{1}));
}

TEST(Trie, AnnotatedLeafLevel) {
  // (managerID, employerID) annotated with a rating per row.
  hj::EncodedRelation rel;
  rel.arity = 2;
  rel.add(std::vector<Id>{0, 10}, 4.0);
  rel.add(std::vector<Id>{0, 11}, 3.0);
  rel.add(std::vector<Id>{1, 10}, 5.0);
  auto t = hj::build_trie(rel, {0, 1});
  ASSERT_TRUE(t.annotated());
  const auto& s0 = t.lookup(std::vector<Id>{0});
  // Dense by id for bitsets (span start up to the maximum), positional otherwise.
  EXPECT_EQ(s0.assoc_storage().size(), s0.layout() == hj::Layout::bitset ? 12u : 2u);
  EXPECT_DOUBLE_EQ(s0.assoc_lookup(10), 4.0);
  EXPECT_DOUBLE_EQ(s0.assoc_lookup(11), 3.0);
  EXPECT_DOUBLE_EQ(t.lookup(std::vector<Id>{1}).assoc_lookup(10), 5.0);
}

TEST(Trie, DuplicatesDedupAndConflicts) {
  auto rel = binary({{1, 2}, {1, 2}, {0, 3}});
  EXPECT_EQ(hj::build_trie(rel, {0, 1}).tuple_count(), 2u);
  hj::EncodedRelation ann;
  ann.arity = 2;
  ann.add(std::vector<Id>{1, 2}, 1.0);
  ann.add(std::vector<Id>{1, 2}, 2.0);
  try {
    hj::build_trie(ann, {0, 1});
    FAIL();
  } catch (const hj::Error& e) {
    EXPECT_EQ(e.kind(), hj::ErrorKind::annotation_conflict);
  }
}

TEST(Trie, Append) {
  auto t = hj::build_trie(binary({{1, 5}}), {0, 1});
  std::vector<Id> prefix{2};
  hj::trie_append(t, prefix, hj::SetView::make_uint({3, 4}));
  EXPECT_EQ(t.lookup(prefix).decode(), (std::vector<Id>{3, 4}));
  EXPECT_EQ(t.lookup(std::vector<Id>{1}).decode(), (std::vector<Id>{5}));
  hj::trie_append(t, prefix, hj::SetView{});
  EXPECT_EQ(t.tuple_count(), 3u);
  try {
    hj::trie_append(t, prefix, hj::SetView::make_uint({4, 3}));
    FAIL();
  } catch (const hj::Error& e) {
    EXPECT_EQ(e.kind(), hj::ErrorKind::order_violation);
  }
}

TEST(Trie, ThreeLevelsAndEmpty) {
  hj::EncodedRelation rel;
  rel.arity = 3;
  rel.add(std::vector<Id>{1, 2, 3});
  rel.add(std::vector<Id>{1, 2, 4});
  rel.add(std::vector<Id>{1, 3, 3});
  rel.add(std::vector<Id>{2, 0, 0});
  auto t = hj::build_trie(rel, {0, 1, 2});
  EXPECT_EQ(t.lookup(std::vector<Id>{1, 2}).decode(), (std::vector<Id>{3, 4}));
  EXPECT_EQ(t.lookup(std::vector<Id>{1, 3}).decode(), (std::vector<Id>{3}));
  EXPECT_EQ(t.lookup(std::vector<Id>{2, 0}).decode(), (std::vector<Id>{0}));
  hj::EncodedRelation empty;
  empty.arity = 2;
  auto e = hj::build_trie(empty, {0, 1});
  EXPECT_TRUE(e.lookup({}).empty());
  EXPECT_TRUE(e.lookup(std::vector<Id>{0}).empty());
}

TEST(Property, TrieRoundTripAnyOrderAndLayout) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    hj::EncodedRelation rel;
    rel.arity = 3;
    std::uniform_int_distribution<Id> v(0, 30);
    std::set<std::vector<Id>> expected;
    for (int i = 0; i < 200; ++i) {
      std::vector<Id> row{v(rng), v(rng), v(rng)};
      rel.add(row);
      expected.insert(row);
    }
    for (auto g : {hj::Granularity::relation, hj::Granularity::set, hj::Granularity::block}) {
      hj::LayoutPolicy policy;
      policy.granularity = g;
      for (std::vector<std::uint32_t> order : {std::vector<std::uint32_t>{0, 1, 2}, {2, 0, 1}, {1, 2, 0}}) {
        auto t = hj::build_trie(rel, order, policy);
        auto back = t.to_relation();
        std::set<std::vector<Id>> got;
        for (std::size_t r = 0; r < back.rows; ++r) got.insert({back.row(r).begin(), back.row(r).end()});
        ASSERT_EQ(got, expected);
        ASSERT_EQ(back.rows, expected.size());
        // Idempotent on its deduplicated output.
        auto again = hj::build_trie(back, order, policy).to_relation();
        ASSERT_EQ(again.data, back.data);
      }
    }
  }
}

TEST(Catalog, BinaryRelationsStoreBothOrders) {
  hj::Catalog cat;
  const auto& e = cat.put("R", binary({{1, 2}, {2, 3}}));
  EXPECT_EQ(e.tries.size(), 2u);
  EXPECT_TRUE(e.tries.count({0, 1}));
  EXPECT_TRUE(e.tries.count({1, 0}));
}

TEST(Catalog, AliasAndErrors) {
  hj::Catalog cat;
  EXPECT_THROW(cat.resolve("R", 2), hj::Error);
  cat.put("Edge", binary({{0, 1}}));
  cat.set_default_relation("Edge");
  EXPECT_EQ(cat.resolve("R", 2).name, "Edge");
  try {
    cat.resolve("P", 3);
    FAIL();
  } catch (const hj::Error& e) {
    EXPECT_EQ(e.kind(), hj::ErrorKind::arity_mismatch);
  }
}

TEST(Catalog, MissingIndexWhenOnDemandDisabled) {
  hj::Catalog cat;
  hj::EncodedRelation rel;
  rel.arity = 3;
  rel.add(std::vector<Id>{0, 1, 2});
  const auto& e = cat.put("T", rel);
  cat.on_demand_indexes = false;
  try {
    cat.trie(e, {2, 1, 0});
    FAIL();
  } catch (const hj::Error& err) {
    EXPECT_EQ(err.kind(), hj::ErrorKind::missing_index);
  }
  cat.on_demand_indexes = true;
  EXPECT_EQ(cat.trie(e, {2, 1, 0})->lookup({}).decode(), (std::vector<Id>{2}));
}

TEST(Ingest, OrderingPruneAndDecodeInvariance) {
  std::string path = temp_path("k4.tsv");
  write_file(path, "# K4\na b\nb c\nc d\nd a\na c\nb d\n");
  std::set<std::pair<std::string, std::string>> reference;
  for (auto kind : hj::testing::all_orderings()) {
    hj::Catalog cat;
    hj::IngestOptions opt;
    opt.ordering = {kind, 9};
    opt.symmetrize = true;
    opt.prune = true;
    hj::ingest(cat, {{"Edge", path, 2}}, opt);
    const auto* e = cat.find("Edge");
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->data.rows, 6u);
    std::set<std::pair<std::string, std::string>> undirected;
    for (std::size_t r = 0; r < e->data.rows; ++r) {
      auto t = e->data.row(r);
      EXPECT_GT(t[0], t[1]);
      auto a = cat.dictionary().decode(t[0]), b = cat.dictionary().decode(t[1]);
      undirected.insert(std::minmax(a, b));
    }
    if (reference.empty()) reference = undirected;
    EXPECT_EQ(undirected, reference);
  }
  std::remove(path.c_str());
}

TEST(Snapshot, RoundTrip) {
  std::string data = temp_path("snap.tsv"), snap = temp_path("snap.bin");
  write_file(data, "x y 1.5\ny z 2\n");
  hj::Catalog cat;
  hj::IngestOptions opt;
  hj::ingest(cat, {{"Edge", data, 2}}, opt);
  cat.set_default_relation("Edge");
  hj::write_snapshot(cat, snap, {{"ordering", "identity"}});
  hj::Catalog loaded;
  auto config = hj::read_snapshot(loaded, snap);
  EXPECT_EQ(config["ordering"], "identity");
  ASSERT_NE(loaded.find("Edge"), nullptr);
  EXPECT_EQ(loaded.find("Edge")->data.data, cat.find("Edge")->data.data);
  EXPECT_EQ(loaded.find("Edge")->data.annotations, cat.find("Edge")->data.annotations);
  EXPECT_EQ(loaded.dictionary().values(), cat.dictionary().values());
  EXPECT_EQ(*loaded.default_relation(), "Edge");

  write_file(snap, "not a snapshot\n");
  hj::Catalog bad;
  try {
    hj::read_snapshot(bad, snap);
    FAIL();
  } catch (const hj::Error& e) {
    EXPECT_EQ(e.kind(), hj::ErrorKind::snapshot);
  }
  std::remove(data.c_str());
  std::remove(snap.c_str());
}
