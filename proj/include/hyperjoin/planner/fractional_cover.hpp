#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "hyperjoin/planner/hypergraph.hpp"
#include "hyperjoin/planner/rational.hpp"

namespace hyperjoin {

struct FractionalCover {
  /// Weight per hypergraph edge (zero for edges outside the candidate set).
  std::vector<Rational> x;
  Rational objective;
};

namespace detail {

/// Solves the square system rows * x = rhs exactly; nullopt when singular.
inline std::optional<std::vector<Rational>> solve_square(std::vector<std::vector<Rational>> rows,
                                                         std::vector<Rational> rhs) {
  const std::size_t n = rows.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && rows[pivot][col].is_zero()) ++pivot;
    if (pivot == n) return std::nullopt;
    std::swap(rows[pivot], rows[col]);
    std::swap(rhs[pivot], rhs[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || rows[r][col].is_zero()) continue;
      Rational f = rows[r][col] / rows[col][col];
      for (std::size_t c = col; c < n; ++c) rows[r][c] -= f * rows[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<Rational> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / rows[i][i];
  return x;
}

}  // namespace detail

/// Minimum fractional edge cover of `vertices` using the edges in
/// `edge_mask`, found by enumerating basic feasible solutions: every choice of
/// |E| tight constraints among the cover rows and the nonnegativity rows.
inline FractionalCover fractional_cover(const Hypergraph& h, EdgeMask edge_mask, VertexMask vertices) {
  std::vector<int> edges;
  for (std::size_t e = 0; e < h.edges.size(); ++e)
    if ((edge_mask >> e & 1u) && (h.edges[e].vertices & vertices)) edges.push_back(static_cast<int>(e));
  std::vector<int> verts;
  for (std::size_t v = 0; v < h.vertex_count(); ++v)
    if (vertices >> v & 1u) verts.push_back(static_cast<int>(v));
  for (int v : verts) {
    bool covered = false;
    for (int e : edges) covered |= (h.edges[e].vertices >> v & 1u) != 0;
    if (!covered) throw Error(ErrorKind::infeasible, "attribute '" + h.vertex_names[v] + "' is covered by no relation");
  }
  FractionalCover best;
  best.x.assign(h.edges.size(), Rational(0));
  if (verts.empty()) return best;

  const std::size_t m = edges.size(), n = verts.size();
  // Row i < n: cover constraint of verts[i]; row n + j: x_j >= 0.
  auto row = [&](std::size_t i) {
    std::vector<Rational> r(m, Rational(0));
    if (i < n) {
      for (std::size_t j = 0; j < m; ++j)
        if (h.edges[edges[j]].vertices >> verts[i] & 1u) r[j] = 1;
    } else {
      r[i - n] = 1;
    }
    return r;
  };
  std::vector<std::vector<Rational>> all_rows;
  for (std::size_t i = 0; i < n + m; ++i) all_rows.push_back(row(i));

  std::optional<Rational> best_value;
  std::vector<Rational> best_x;
  std::vector<std::size_t> pick(m);
  // Lexicographic walk over m-subsets of the n + m rows.
  for (std::size_t i = 0; i < m; ++i) pick[i] = i;
  while (true) {
    std::vector<std::vector<Rational>> rows;
    std::vector<Rational> rhs;
    for (std::size_t i : pick) {
      rows.push_back(all_rows[i]);
      rhs.push_back(i < n ? Rational(1) : Rational(0));
    }
    if (auto x = detail::solve_square(std::move(rows), std::move(rhs))) {
      bool feasible = true;
      for (const auto& xi : *x) feasible &= xi >= Rational(0);
      for (std::size_t i = 0; feasible && i < n; ++i) {
        Rational s(0);
        for (std::size_t j = 0; j < m; ++j) s += all_rows[i][j] * (*x)[j];
        feasible = s >= Rational(1);
      }
      if (feasible) {
        Rational value(0);
        for (const auto& xi : *x) value += xi;
        if (!best_value || value < *best_value) {
          best_value = value;
          best_x = *x;
        }
      }
    }
    std::size_t k = m;
    while (k > 0 && pick[k - 1] == n + k - 1) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t i = k; i < m; ++i) pick[i] = pick[i - 1] + 1;
  }
  for (std::size_t j = 0; j < m; ++j) best.x[edges[j]] = best_x[j];
  best.objective = *best_value;
  return best;
}

/// AGM exponent of `vertices` under uniform relation sizes: the optimum of the
/// fractional edge cover LP.
inline Rational agm_exponent(const Hypergraph& h, EdgeMask edge_mask, VertexMask vertices) {
  return fractional_cover(h, edge_mask, vertices).objective;
}

inline Rational agm_exponent(const Hypergraph& h) { return agm_exponent(h, h.all_edges(), h.all_vertices()); }

class AgmCache {
 public:
  explicit AgmCache(const Hypergraph& h) : h_(h) {}

  Rational operator()(EdgeMask edges, VertexMask vertices) {
    std::uint64_t key = static_cast<std::uint64_t>(edges) << 32 | vertices;
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    Rational r = agm_exponent(h_, edges, vertices);
    memo_.emplace(key, r);
    return r;
  }

 private:
  const Hypergraph& h_;
  std::map<std::uint64_t, Rational> memo_;
};

}  // namespace hyperjoin
