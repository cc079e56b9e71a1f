#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyperjoin/setkernel/set_view.hpp"

namespace hyperjoin {

enum class Granularity : std::uint8_t { relation, set, block };

inline const char* to_string(Granularity g) {
  switch (g) {
    case Granularity::relation: return "relation";
    case Granularity::set: return "set";
    case Granularity::block: return "block";
  }
  return "?";
}

struct LayoutPolicy {
  Granularity granularity = Granularity::set;
  /// Bits one element may cost before a bitset is rejected (set level).
  std::uint32_t register_bits = 256;
  /// Composite block size; power of two, multiple of 64.
  std::uint32_t block_bits = 256;
  /// Threshold inside a composite block. Range is at most block_bits there, so
  /// the set-level W would always pick bitset; 32 picks a bitset exactly when
  /// it is no larger than the uint array.
  std::uint32_t block_register_bits = 32;
};

/// Bitset iff range / cardinality <= W.
inline Layout choose_layout(std::uint64_t cardinality, std::uint64_t range, std::uint32_t register_bits = 256) {
  if (cardinality == 0) return Layout::uint;
  return range <= std::uint64_t{register_bits} * cardinality ? Layout::bitset : Layout::uint;
}

/// Builds a SetView from strictly increasing ids under the given policy.
inline SetView materialize_set(std::span<const Id> sorted, const LayoutPolicy& policy = {}) {
  if (!is_strictly_increasing(sorted))
    throw Error(ErrorKind::order_violation, "set elements must be strictly increasing");
  if (sorted.empty()) return {};
  switch (policy.granularity) {
    case Granularity::relation:
      return SetView::make_uint({sorted.begin(), sorted.end()});
    case Granularity::set: {
      std::uint64_t range = std::uint64_t{sorted.back()} - sorted.front() + 1;
      if (choose_layout(sorted.size(), range, policy.register_bits) == Layout::bitset)
        return SetView::make_bitset(sorted);
      return SetView::make_uint({sorted.begin(), sorted.end()});
    }
    case Granularity::block: {
      CompositeData data;
      data.block_bits = policy.block_bits;
      const Id mask = ~(policy.block_bits - 1);
      const std::uint32_t per_block = policy.block_bits / 64;
      std::size_t i = 0;
      while (i < sorted.size()) {
        Id base = sorted[i] & mask;
        std::size_t j = i;
        while (j < sorted.size() && (sorted[j] & mask) == base) ++j;
        std::size_t count = j - i;
        data.bases.push_back(base);
        if (choose_layout(count, policy.block_bits, policy.block_register_bits) == Layout::bitset) {
          data.kinds.push_back(Layout::bitset);
          data.begin.push_back(static_cast<std::uint32_t>(data.words.size()));
          data.words.resize(data.words.size() + per_block, 0);
          std::uint64_t* words = data.words.data() + data.begin.back();
          for (std::size_t k = i; k < j; ++k) {
            Id rel = sorted[k] - base;
            words[rel >> 6] |= 1ull << (rel & 63);
          }
        } else {
          data.kinds.push_back(Layout::uint);
          data.begin.push_back(static_cast<std::uint32_t>(data.values.size()));
          data.values.insert(data.values.end(), sorted.begin() + static_cast<std::ptrdiff_t>(i),
                             sorted.begin() + static_cast<std::ptrdiff_t>(j));
        }
        data.rank.push_back(data.rank.back() + static_cast<std::uint32_t>(count));
        i = j;
      }
      return SetView::from_composite_data(std::move(data));
    }
  }
  return {};
}

inline Granularity parse_granularity(const std::string& name) {
  if (name == "relation") return Granularity::relation;
  if (name == "set") return Granularity::set;
  if (name == "block") return Granularity::block;
  throw Error(ErrorKind::usage, "unknown layout granularity '" + name + "'");
}

}  // namespace hyperjoin
