#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hyperjoin/setkernel/intersect.hpp"
#include "hyperjoin/setkernel/layout.hpp"

namespace hyperjoin {

/// One layout x algorithm combination the oracle tries for every pair.
enum class Combination : std::uint8_t {
  uint_merge,
  uint_galloping,
  uint_bitset,
  bitset_uint,
  bitset_bitset,
  composite_composite,
};

inline constexpr std::size_t combination_count = 6;

inline const char* to_string(Combination c) {
  switch (c) {
    case Combination::uint_merge: return "uint/merge";
    case Combination::uint_galloping: return "uint/galloping";
    case Combination::uint_bitset: return "uint/bitset";
    case Combination::bitset_uint: return "bitset/uint";
    case Combination::bitset_bitset: return "bitset/bitset";
    case Combination::composite_composite: return "composite/composite";
  }
  return "?";
}

struct OraclePairResult {
  std::array<std::uint64_t, combination_count> cost{};
  Combination best = Combination::uint_merge;
  std::uint32_t output_cardinality = 0;
};

struct OracleReport {
  std::vector<OraclePairResult> pairs;
  std::uint64_t oracle_total = 0;
  /// Totals when every pair uses the layout a fixed granularity would choose.
  std::array<std::uint64_t, 3> granularity_total{};
  std::array<std::uint64_t, combination_count> best_count{};

  bool empty() const { return pairs.empty(); }
  /// granularity cost / oracle cost; 1.0 when the oracle cost is zero.
  double relative(Granularity g) const {
    std::uint64_t total = granularity_total[static_cast<std::size_t>(g)];
    if (oracle_total == 0) return total == 0 ? 1.0 : std::numeric_limits<double>::infinity();
    return static_cast<double>(total) / static_cast<double>(oracle_total);
  }
};

/// Runs every combination on every pair and keeps the cheapest, counting
/// deterministic work units so the report is reproducible.
inline OracleReport oracle_optimize(const std::vector<std::pair<std::vector<Id>, std::vector<Id>>>& workload,
                                    const LayoutPolicy& base_policy = {}) {
  OracleReport report;
  LayoutPolicy relation = base_policy, set = base_policy, block = base_policy;
  relation.granularity = Granularity::relation;
  set.granularity = Granularity::set;
  block.granularity = Granularity::block;
  for (const auto& [xs, ys] : workload) {
    OraclePairResult r;
    SetView ua = SetView::make_uint(xs), ub = SetView::make_uint(ys);
    SetView ba = SetView::make_bitset(xs), bb = SetView::make_bitset(ys);
    SetView ca = materialize_set(xs, block), cb = materialize_set(ys, block);
    IntersectStats s;
    auto run = [&](Combination c, auto&& fn) {
      s = {};
      SetView out = fn();
      r.cost[static_cast<std::size_t>(c)] = s.comparisons;
      r.output_cardinality = out.cardinality();
    };
    run(Combination::uint_merge, [&] { return intersect_uint_uint_with(ua, ub, Algorithm::merge, &s); });
    run(Combination::uint_galloping,
        [&] { return intersect_uint_uint_with(ua, ub, Algorithm::galloping, &s); });
    run(Combination::uint_bitset, [&] { return intersect(ua, bb, &s); });
    run(Combination::bitset_uint, [&] { return intersect(ba, ub, &s); });
    run(Combination::bitset_bitset, [&] { return intersect(ba, bb, &s); });
    run(Combination::composite_composite, [&] { return intersect(ca, cb, &s); });
    std::size_t best = 0;
    for (std::size_t c = 1; c < combination_count; ++c)
      if (r.cost[c] < r.cost[best]) best = c;
    r.best = static_cast<Combination>(best);
    report.oracle_total += r.cost[best];
    ++report.best_count[best];

    IntersectStats g;
    intersect(materialize_set(xs, relation), materialize_set(ys, relation), &g);
    report.granularity_total[0] += g.comparisons;
    intersect(materialize_set(xs, set), materialize_set(ys, set), &g);
    report.granularity_total[1] += g.comparisons;
    report.granularity_total[2] += r.cost[static_cast<std::size_t>(Combination::composite_composite)];
    report.pairs.push_back(r);
  }
  return report;
}

}  // namespace hyperjoin
