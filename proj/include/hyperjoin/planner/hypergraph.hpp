#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hyperjoin/frontend/validate.hpp"

namespace hyperjoin {

using VertexMask = std::uint32_t;
using EdgeMask = std::uint32_t;

inline constexpr std::size_t max_vertices = 32;

struct Hyperedge {
  /// Body atom this edge stands for.
  int atom = -1;
  VertexMask vertices = 0;
  /// The atom carries selection constants.
  bool selection = false;
};

/// One vertex per variable and one edge per body atom. Constants are not
/// vertices unless `constants_as_vertices` was requested, in which case each
/// distinct constant becomes an extra vertex after the variables.
struct Hypergraph {
  std::vector<std::string> vertex_names;
  std::size_t variable_count = 0;
  std::vector<Hyperedge> edges;
  /// Atoms without variables (pure selections or scalar relations).
  std::vector<int> guards;

  std::size_t vertex_count() const { return vertex_names.size(); }
  VertexMask all_vertices() const {
    return vertex_count() == 32 ? ~VertexMask{0} : (VertexMask{1} << vertex_count()) - 1;
  }
  EdgeMask all_edges() const { return edges.size() == 32 ? ~EdgeMask{0} : (EdgeMask{1} << edges.size()) - 1; }
  VertexMask variable_mask() const {
    return variable_count == 32 ? ~VertexMask{0} : (VertexMask{1} << variable_count) - 1;
  }
  VertexMask cover(EdgeMask edges_mask) const {
    VertexMask out = 0;
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (edges_mask >> e & 1u) out |= edges[e].vertices;
    return out;
  }
};

inline Hypergraph build_hypergraph(const RuleIR& rule, bool constants_as_vertices = false) {
  Hypergraph h;
  h.vertex_names = rule.variables;
  h.variable_count = rule.variables.size();
  std::map<Id, int> constant_vertex;
  std::map<Id, bool> absent_constant;
  for (std::size_t i = 0; i < rule.atoms.size(); ++i) {
    const AtomIR& atom = rule.atoms[i];
    Hyperedge e;
    e.atom = static_cast<int>(i);
    e.selection = atom.has_selection();
    for (std::size_t k = 0; k < atom.terms.size(); ++k) {
      int t = atom.terms[k];
      if (t >= 0) {
        e.vertices |= VertexMask{1} << t;
      } else if (constants_as_vertices) {
        // Constants absent from the dictionary get their own vertex each.
        Id key = atom.empty_selection ? static_cast<Id>(-1 - static_cast<int>(constant_vertex.size())) : atom.constants[k];
        auto [it, inserted] = constant_vertex.try_emplace(key, static_cast<int>(h.vertex_names.size()));
        if (inserted) h.vertex_names.push_back("#" + std::to_string(h.vertex_names.size()));
        e.vertices |= VertexMask{1} << it->second;
      }
    }
    if (e.vertices == 0) h.guards.push_back(static_cast<int>(i));
    else h.edges.push_back(e);
  }
  if (h.vertex_count() > max_vertices)
    throw Error(ErrorKind::query_too_large, "query has more than " + std::to_string(max_vertices) + " attributes");
  return h;
}

}  // namespace hyperjoin
