#pragma once

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "hyperjoin/planner/fractional_cover.hpp"

namespace hyperjoin {

inline constexpr std::size_t default_edge_cap = 8;

struct GhdNode {
  EdgeMask lambda = 0;
  VertexMask chi = 0;
  int parent = -1;
  std::vector<int> children;
};

/// Rooted decomposition tree; nodes are stored in pre-order with the root at 0
/// and children ordered by their lowest edge id.
struct Ghd {
  std::vector<GhdNode> nodes;

  int height(int node = 0) const {
    int h = 0;
    for (int c : nodes[node].children) h = std::max(h, 1 + height(c));
    return h;
  }
  int depth(int node) const {
    int d = 0;
    for (int p = nodes[node].parent; p >= 0; p = nodes[p].parent) ++d;
    return d;
  }
  /// Label built from sorted edge ids with children sorted by label, so two
  /// trees share it iff they are isomorphic as labelled rooted trees.
  std::string canonical(int node = 0) const {
    std::vector<std::string> kids;
    for (int c : nodes[node].children) kids.push_back(canonical(c));
    std::sort(kids.begin(), kids.end());
    std::string out = std::to_string(nodes[node].lambda) + "(";
    for (const auto& k : kids) out += k + ",";
    return out + ")";
  }
  /// Pre-order list of sorted edge ids per node; the final tie-break key.
  std::vector<std::vector<int>> lambda_sequence() const {
    std::vector<std::vector<int>> out;
    std::function<void(int)> walk = [&](int v) {
      std::vector<int> ids;
      for (int e = 0; e < 32; ++e)
        if (nodes[v].lambda >> e & 1u) ids.push_back(e);
      out.push_back(std::move(ids));
      for (int c : nodes[v].children) walk(c);
    };
    if (!nodes.empty()) walk(0);
    return out;
  }
};

/// Properties 1-3: every edge lies inside some bag, the bags holding any
/// vertex form a connected subtree, and each bag is covered by its lambda.
inline bool satisfies_ghd_properties(const Hypergraph& h, const Ghd& g) {
  if (g.nodes.empty()) return h.edges.empty();
  for (const auto& e : h.edges) {
    bool inside = false;
    for (const auto& n : g.nodes) inside |= (e.vertices & ~n.chi) == 0;
    if (!inside) return false;
  }
  for (const auto& n : g.nodes)
    if ((n.chi & ~h.cover(n.lambda)) != 0) return false;
  for (std::size_t v = 0; v < h.vertex_count(); ++v) {
    const VertexMask bit = VertexMask{1} << v;
    // Connected iff exactly one holder has a parent that is not a holder.
    int tops = 0;
    for (const auto& n : g.nodes)
      if ((n.chi & bit) && (n.parent < 0 || !(g.nodes[n.parent].chi & bit))) ++tops;
    bool any = std::any_of(g.nodes.begin(), g.nodes.end(), [&](const GhdNode& n) { return (n.chi & bit) != 0; });
    if (any && tops != 1) return false;
  }
  return true;
}

namespace detail {

class GhdEnumerator {
 public:
  explicit GhdEnumerator(const Hypergraph& h) : h_(h) {}

  std::vector<Ghd> run() { return decompose(h_.all_edges(), 0); }

 private:
  /// Edges of `rest` grouped by connectivity through vertices outside `chi`.
  std::vector<EdgeMask> components(EdgeMask rest, VertexMask chi) const {
    std::vector<EdgeMask> out;
    while (rest) {
      EdgeMask comp = rest & (~rest + 1);
      VertexMask reach = h_.cover(comp) & ~chi;
      bool grew = true;
      while (grew) {
        grew = false;
        for (std::size_t e = 0; e < h_.edges.size(); ++e) {
          EdgeMask bit = EdgeMask{1} << e;
          if ((rest & bit) && !(comp & bit) && (h_.edges[e].vertices & reach)) {
            comp |= bit;
            reach |= h_.edges[e].vertices & ~chi;
            grew = true;
          }
        }
      }
      out.push_back(comp);
      rest &= ~comp;
    }
    return out;
  }

  static void graft(Ghd& into, int parent, const Ghd& sub) {
    const int offset = static_cast<int>(into.nodes.size());
    for (const auto& n : sub.nodes) {
      GhdNode copy = n;
      copy.parent = n.parent < 0 ? parent : n.parent + offset;
      for (int& c : copy.children) c += offset;
      into.nodes.push_back(std::move(copy));
    }
    into.nodes[parent].children.push_back(offset);
  }

  /// All decompositions of `edges` whose root bag contains `required`.
  const std::vector<Ghd>& decompose(EdgeMask edges, VertexMask required) {
    const std::uint64_t key = static_cast<std::uint64_t>(edges) << 32 | required;
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<Ghd> out;
    // Ascending subsets keep the enumeration order deterministic.
    for (EdgeMask root = 1; root <= edges && root != 0; ++root) {
      if ((root & ~edges) != 0) continue;
      const VertexMask chi = h_.cover(root);
      if ((required & ~chi) != 0) continue;
      std::vector<const std::vector<Ghd>*> options;
      bool feasible = true;
      for (EdgeMask comp : components(edges & ~root, chi)) {
        const auto& subs = decompose(comp, h_.cover(comp) & chi);
        if (subs.empty()) {
          feasible = false;
          break;
        }
        options.push_back(&subs);
      }
      if (!feasible) continue;
      Ghd base;
      base.nodes.push_back(GhdNode{root, chi, -1, {}});
      std::function<void(std::size_t, Ghd&)> expand = [&](std::size_t i, Ghd& partial) {
        if (i == options.size()) {
          out.push_back(partial);
          return;
        }
        for (const Ghd& sub : *options[i]) {
          Ghd next = partial;
          graft(next, 0, sub);
          expand(i + 1, next);
        }
      };
      expand(0, base);
    }
    return memo_.emplace(key, std::move(out)).first->second;
  }

  const Hypergraph& h_;
  std::map<std::uint64_t, std::vector<Ghd>> memo_;
};

}  // namespace detail

/// Every GHD reachable by recursive decomposition: pick a root lambda, let chi
/// be its attributes, and decompose each connected component of the remaining
/// edges into a child subtree. Isomorphic duplicates are dropped.
inline std::vector<Ghd> enumerate_ghds(const Hypergraph& h, std::size_t edge_cap = default_edge_cap) {
  if (h.edges.size() > edge_cap)
    throw Error(ErrorKind::query_too_large, "query has " + std::to_string(h.edges.size()) +
                                                " relations; the GHD search is capped at " + std::to_string(edge_cap));
  if (h.edges.empty()) return {Ghd{{GhdNode{}}}};
  std::vector<Ghd> out;
  std::set<std::string> seen;
  for (Ghd& g : detail::GhdEnumerator(h).run()) {
    if (!satisfies_ghd_properties(h, g)) continue;
    if (seen.insert(g.canonical()).second) out.push_back(std::move(g));
  }
  return out;
}

inline Ghd single_node_ghd(const Hypergraph& h) {
  return Ghd{{GhdNode{h.all_edges(), h.cover(h.all_edges()), -1, {}}}};
}

}  // namespace hyperjoin
