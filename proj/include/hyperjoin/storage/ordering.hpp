#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hyperjoin/common.hpp"

namespace hyperjoin {

using Edge = std::pair<Id, Id>;

/// Undirected adjacency with sorted, duplicate-free neighbour lists.
struct Graph {
  std::vector<std::vector<Id>> adj;

  std::size_t node_count() const { return adj.size(); }
  std::size_t degree(Id v) const { return adj[v].size(); }

  static Graph from_edges(std::size_t n, const std::vector<Edge>& edges) {
    Graph g;
    g.adj.resize(n);
    for (auto [s, d] : edges) {
      if (s == d) {
        g.adj[s].push_back(s);
        continue;
      }
      g.adj[s].push_back(d);
      g.adj[d].push_back(s);
    }
    for (auto& nbrs : g.adj) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    return g;
  }
};

enum class OrderingKind : std::uint8_t { identity, random, bfs, strong_runs, degree, rev_degree, shingle, hybrid };

struct OrderingStrategy {
  OrderingKind kind = OrderingKind::identity;
  std::uint64_t seed = 0;
};

inline const char* to_string(OrderingKind kind) {
  switch (kind) {
    case OrderingKind::identity: return "identity";
    case OrderingKind::random: return "random";
    case OrderingKind::bfs: return "bfs";
    case OrderingKind::strong_runs: return "strongruns";
    case OrderingKind::degree: return "degree";
    case OrderingKind::rev_degree: return "revdegree";
    case OrderingKind::shingle: return "shingle";
    case OrderingKind::hybrid: return "hybrid";
  }
  return "?";
}

inline OrderingKind parse_ordering(const std::string& name) {
  for (auto k : {OrderingKind::identity, OrderingKind::random, OrderingKind::bfs, OrderingKind::strong_runs,
                 OrderingKind::degree, OrderingKind::rev_degree, OrderingKind::shingle, OrderingKind::hybrid})
    if (name == to_string(k)) return k;
  throw Error(ErrorKind::usage, "unknown ordering '" + name + "'");
}

namespace detail {

/// Converts a visit sequence (new label -> old id) into perm[old] = new.
inline std::vector<Id> invert_sequence(const std::vector<Id>& sequence) {
  std::vector<Id> perm(sequence.size());
  for (std::size_t i = 0; i < sequence.size(); ++i) perm[sequence[i]] = static_cast<Id>(i);
  return perm;
}

inline std::vector<Id> by_degree_desc(const Graph& g) {
  std::vector<Id> nodes(g.node_count());
  std::iota(nodes.begin(), nodes.end(), Id{0});
  std::stable_sort(nodes.begin(), nodes.end(), [&](Id a, Id b) { return g.degree(a) > g.degree(b); });
  return nodes;
}

inline std::vector<Id> bfs_sequence(const Graph& g) {
  std::vector<Id> sequence;
  sequence.reserve(g.node_count());
  std::vector<bool> seen(g.node_count(), false);
  std::queue<Id> frontier;
  for (Id root : by_degree_desc(g)) {
    if (seen[root]) continue;
    seen[root] = true;
    frontier.push(root);
    while (!frontier.empty()) {
      Id u = frontier.front();
      frontier.pop();
      sequence.push_back(u);
      for (Id w : g.adj[u]) {
        if (!seen[w]) {
          seen[w] = true;
          frontier.push(w);
        }
      }
    }
  }
  return sequence;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Returns perm with perm[old] = new; always a bijection on [0, n).
inline std::vector<Id> order_nodes(const Graph& g, const OrderingStrategy& strategy) {
  const std::size_t n = g.node_count();
  std::vector<Id> sequence(n);
  std::iota(sequence.begin(), sequence.end(), Id{0});
  switch (strategy.kind) {
    case OrderingKind::identity:
      break;
    case OrderingKind::random: {
      std::mt19937_64 rng(strategy.seed);
      std::shuffle(sequence.begin(), sequence.end(), rng);
      break;
    }
    case OrderingKind::bfs:
      sequence = detail::bfs_sequence(g);
      break;
    case OrderingKind::degree:
      sequence = detail::by_degree_desc(g);
      break;
    case OrderingKind::rev_degree:
      std::stable_sort(sequence.begin(), sequence.end(), [&](Id a, Id b) { return g.degree(a) < g.degree(b); });
      break;
    case OrderingKind::strong_runs: {
      // Each node in degree order pulls its unlabeled neighbours into one run.
      std::vector<bool> labeled(n, false);
      sequence.clear();
      for (Id u : detail::by_degree_desc(g)) {
        if (!labeled[u]) {
          labeled[u] = true;
          sequence.push_back(u);
        }
        for (Id w : g.adj[u]) {
          if (!labeled[w]) {
            labeled[w] = true;
            sequence.push_back(w);
          }
        }
      }
      break;
    }
    case OrderingKind::shingle: {
      std::vector<std::uint64_t> shingle(n);
      for (Id v = 0; v < n; ++v) {
        std::uint64_t best = detail::splitmix64(v);
        for (Id w : g.adj[v]) best = std::min(best, detail::splitmix64(w));
        shingle[v] = best;
      }
      std::stable_sort(sequence.begin(), sequence.end(), [&](Id a, Id b) { return shingle[a] < shingle[b]; });
      break;
    }
    case OrderingKind::hybrid: {
      sequence = detail::bfs_sequence(g);
      std::stable_sort(sequence.begin(), sequence.end(), [&](Id a, Id b) { return g.degree(a) > g.degree(b); });
      break;
    }
  }
  return detail::invert_sequence(sequence);
}

/// Keeps exactly the edges with src > dst.
inline std::vector<Edge> prune_symmetric(const std::vector<Edge>& edges) {
  std::vector<Edge> out;
  for (const auto& e : edges)
    if (e.first > e.second) out.push_back(e);
  return out;
}

/// Pearson's first skewness coefficient 3 (mean - mode) / sigma, using the
/// population deviation and the smallest most frequent value as the mode.
inline double density_skew(const std::vector<std::uint64_t>& degrees) {
  if (degrees.empty()) throw Error(ErrorKind::degenerate_distribution, "empty degree distribution");
  double mean = 0;
  for (auto d : degrees) mean += static_cast<double>(d);
  mean /= static_cast<double>(degrees.size());
  double var = 0;
  for (auto d : degrees) var += (static_cast<double>(d) - mean) * (static_cast<double>(d) - mean);
  double sigma = std::sqrt(var / static_cast<double>(degrees.size()));
  if (sigma == 0) throw Error(ErrorKind::degenerate_distribution, "degree distribution has zero deviation");
  std::map<std::uint64_t, std::size_t> freq;
  for (auto d : degrees) ++freq[d];
  std::uint64_t mode = freq.begin()->first;
  std::size_t best = 0;
  for (auto [value, count] : freq) {
    if (count > best) {
      best = count;
      mode = value;
    }
  }
  return 3.0 * (mean - static_cast<double>(mode)) / sigma;
}

inline double density_skew(const Graph& g) {
  std::vector<std::uint64_t> degrees;
  degrees.reserve(g.node_count());
  for (const auto& nbrs : g.adj) degrees.push_back(nbrs.size());
  return density_skew(degrees);
}

}  // namespace hyperjoin
