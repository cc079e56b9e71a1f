#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "hyperjoin/setkernel/set_view.hpp"

namespace hyperjoin {

enum class Algorithm : std::uint8_t { none, merge, galloping, bitset_and, probe, composite };

inline const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::none: return "none";
    case Algorithm::merge: return "merge";
    case Algorithm::galloping: return "galloping";
    case Algorithm::bitset_and: return "bitset_and";
    case Algorithm::probe: return "probe";
    case Algorithm::composite: return "composite";
  }
  return "?";
}

/// Work counters for one kernel call. `comparisons` counts unit operations:
/// one scalar comparison, one 4x4 block compare, one word AND or one probe.
struct IntersectStats {
  std::uint64_t comparisons = 0;
  Algorithm algorithm = Algorithm::none;
  std::uint32_t output_cardinality = 0;
};

/// Cardinality ratio above which the uint kernel switches to galloping.
inline constexpr std::uint64_t galloping_ratio = 32;

inline bool use_galloping(std::size_t a, std::size_t b) {
  std::uint64_t lo = std::min(a, b), hi = std::max(a, b);
  return hi > galloping_ratio * lo;
}

namespace detail {

/// Shuffling-style merge: compares 4x4 blocks and advances the block with the
/// smaller tail, finishing with a scalar merge.
inline void merge_uint(std::span<const Id> a, std::span<const Id> b, std::vector<Id>& out,
                       std::uint64_t& work) {
  std::size_t i = 0, j = 0;
  while (i + 4 <= a.size() && j + 4 <= b.size()) {
    ++work;
    for (std::size_t p = 0; p < 4; ++p) {
      Id v = a[i + p];
      if (v == b[j] || v == b[j + 1] || v == b[j + 2] || v == b[j + 3]) out.push_back(v);
    }
    Id amax = a[i + 3], bmax = b[j + 3];
    if (amax <= bmax) i += 4;
    if (bmax <= amax) j += 4;
  }
  while (i < a.size() && j < b.size()) {
    ++work;
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      out.push_back(a[i]);
      ++i;
      ++j;
    }
  }
}

/// Galloping: for each element of `small`, exponential then binary search in
/// the remainder of `large`.
inline void gallop_uint(std::span<const Id> small, std::span<const Id> large, std::vector<Id>& out,
                        std::uint64_t& work) {
  std::size_t lo = 0;
  for (Id v : small) {
    if (lo >= large.size()) break;
    std::size_t step = 1, hi = lo;
    // Find hi with large[hi] >= v (or hi == size).
    while (true) {
      ++work;
      if (large[hi] >= v) break;
      lo = hi + 1;
      hi = lo + step - 1;
      step <<= 1;
      if (hi >= large.size()) {
        hi = large.size();
        break;
      }
    }
    // Binary search for the first element >= v in [lo, hi].
    std::size_t l = lo, r = hi;
    while (l < r) {
      ++work;
      std::size_t m = l + (r - l) / 2;
      if (large[m] < v) l = m + 1; else r = m;
    }
    lo = l;
    if (lo < large.size() && large[lo] == v) {
      out.push_back(v);
      ++lo;
    }
  }
}

inline void uint_kernel(std::span<const Id> a, std::span<const Id> b, Algorithm algorithm,
                        std::vector<Id>& out, std::uint64_t& work) {
  if (algorithm == Algorithm::galloping) {
    if (a.size() <= b.size()) gallop_uint(a, b, out, work); else gallop_uint(b, a, out, work);
  } else {
    merge_uint(a, b, out, work);
  }
}

/// Word of `bs` covering ids [id, id + 64); `id` is a multiple of 64. The cursor
/// only moves forward, so callers must ask for increasing ids.
inline std::uint64_t bitset_word_at(const BitsetData& bs, Id id, std::size_t& cursor) {
  while (cursor < bs.block_count() && bs.block_end(cursor) <= id) ++cursor;
  if (cursor == bs.block_count() || id < bs.offsets[cursor]) return 0;
  return bs.words[bs.word_begin[cursor] + (id - bs.offsets[cursor]) / 64];
}

inline bool bitset_probe(const BitsetData& bs, Id v, std::size_t& cursor) {
  while (cursor < bs.block_count() && bs.block_end(cursor) <= v) ++cursor;
  if (cursor == bs.block_count() || v < bs.offsets[cursor]) return false;
  Id rel = v - bs.offsets[cursor];
  return (bs.words[bs.word_begin[cursor] + (rel >> 6)] >> (rel & 63)) & 1u;
}

/// Jumps the block cursor straight to v's block when blocks have a fixed size.
inline bool bitset_probe_masked(const BitsetData& bs, Id v, std::size_t& cursor) {
  if (bs.block_bits == 0) return bitset_probe(bs, v, cursor);
  Id base = v & ~(bs.block_bits - 1);
  if (cursor < bs.block_count() && bs.offsets[cursor] < base) {
    auto it = std::lower_bound(bs.offsets.begin() + static_cast<std::ptrdiff_t>(cursor),
                               bs.offsets.end(), base);
    cursor = static_cast<std::size_t>(it - bs.offsets.begin());
  }
  if (cursor == bs.block_count() || bs.offsets[cursor] != base) return false;
  Id rel = v - base;
  return (bs.words[bs.word_begin[cursor] + (rel >> 6)] >> (rel & 63)) & 1u;
}

inline void append_block(BitsetData& out, Id offset, std::span<const std::uint64_t> words) {
  out.offsets.push_back(offset);
  out.words.insert(out.words.end(), words.begin(), words.end());
  out.word_begin.push_back(static_cast<std::uint32_t>(out.words.size()));
}

inline bool all_zero(std::span<const std::uint64_t> words) {
  return std::all_of(words.begin(), words.end(), [](std::uint64_t w) { return w == 0; });
}

}  // namespace detail

/// uint x uint with an explicit algorithm (used by the oracle optimizer).
inline SetView intersect_uint_uint_with(const SetView& a, const SetView& b, Algorithm algorithm,
                                        IntersectStats* stats = nullptr) {
  std::vector<Id> out;
  std::uint64_t work = 0;
  auto av = a.uint_values(), bv = b.uint_values();
  out.reserve(std::min(av.size(), bv.size()));
  detail::uint_kernel(av, bv, algorithm, out, work);
  if (stats) *stats = {work, algorithm, static_cast<std::uint32_t>(out.size())};
  return SetView::make_uint(std::move(out));
}

inline SetView intersect_uint_uint(const SetView& a, const SetView& b, IntersectStats* stats = nullptr) {
  Algorithm algorithm =
      use_galloping(a.cardinality(), b.cardinality()) ? Algorithm::galloping : Algorithm::merge;
  return intersect_uint_uint_with(a, b, algorithm, stats);
}

inline SetView intersect_bitset_bitset(const SetView& a, const SetView& b,
                                       IntersectStats* stats = nullptr) {
  const BitsetData& x = a.bitset();
  const BitsetData& y = b.bitset();
  BitsetData out;
  std::uint64_t work = 0;
  if (x.block_bits != 0 && x.block_bits == y.block_bits) {
    // Uniform aligned blocks: intersect the offsets, then AND matched blocks.
    out.block_bits = x.block_bits;
    std::vector<Id> shared;
    Algorithm offset_algorithm = use_galloping(x.offsets.size(), y.offsets.size())
                                     ? Algorithm::galloping
                                     : Algorithm::merge;
    detail::uint_kernel(x.offsets, y.offsets, offset_algorithm, shared, work);
    const std::uint32_t per_block = x.block_bits / 64;
    std::vector<std::uint64_t> block(per_block);
    std::size_t i = 0, j = 0;
    for (Id off : shared) {
      while (x.offsets[i] != off) ++i;
      while (y.offsets[j] != off) ++j;
      for (std::uint32_t w = 0; w < per_block; ++w)
        block[w] = x.words[x.word_begin[i] + w] & y.words[y.word_begin[j] + w];
      work += per_block;
      if (!detail::all_zero(block)) detail::append_block(out, off, block);
    }
  } else {
    // Variable spans: sweep overlapping block pairs, AND the overlapping words.
    std::size_t i = 0, j = 0;
    std::vector<std::uint64_t> block;
    while (i < x.block_count() && j < y.block_count()) {
      ++work;
      std::uint64_t lo = std::max<std::uint64_t>(x.offsets[i], y.offsets[j]);
      std::uint64_t hi = std::min(x.block_end(i), y.block_end(j));
      if (lo < hi) {
        block.clear();
        for (std::uint64_t id = lo; id < hi; id += 64) {
          block.push_back(x.words[x.word_begin[i] + (id - x.offsets[i]) / 64] &
                          y.words[y.word_begin[j] + (id - y.offsets[j]) / 64]);
        }
        work += block.size();
        std::size_t first = 0, last = block.size();
        while (first < last && block[first] == 0) ++first;
        while (last > first && block[last - 1] == 0) --last;
        if (first < last) {
          detail::append_block(out, static_cast<Id>(lo + 64 * first),
                               std::span<const std::uint64_t>(block).subspan(first, last - first));
        }
      }
      if (x.block_end(i) <= y.block_end(j)) ++i; else ++j;
    }
  }
  SetView result = SetView::from_bitset_data(std::move(out));
  if (stats) *stats = {work, Algorithm::bitset_and, result.cardinality()};
  return result;
}

/// Result is always uint: it is at most as dense as the sparser operand.
inline SetView intersect_uint_bitset(const SetView& a, const SetView& b,
                                     IntersectStats* stats = nullptr) {
  const BitsetData& bs = b.bitset();
  std::vector<Id> out;
  std::size_t cursor = 0;
  std::uint64_t work = 0;
  for (Id v : a.uint_values()) {
    ++work;
    if (detail::bitset_probe_masked(bs, v, cursor)) out.push_back(v);
    if (cursor == bs.block_count()) break;
  }
  if (stats) *stats = {work, Algorithm::probe, static_cast<std::uint32_t>(out.size())};
  return SetView::make_uint(std::move(out));
}

namespace detail {

/// Composite x composite with equal block sizes; blocks stay uint if either
/// side is uint, otherwise bitset.
inline SetView intersect_composite_composite(const CompositeData& x, const CompositeData& y,
                                             std::uint64_t& work) {
  CompositeData out;
  out.block_bits = x.block_bits;
  const std::uint32_t per_block = x.words_per_block();
  std::vector<Id> scratch;
  std::vector<std::uint64_t> words(per_block);
  std::size_t i = 0, j = 0;
  while (i < x.block_count() && j < y.block_count()) {
    ++work;
    if (x.bases[i] < y.bases[j]) { ++i; continue; }
    if (y.bases[j] < x.bases[i]) { ++j; continue; }
    Id base = x.bases[i];
    Layout kx = x.kinds[i], ky = y.kinds[j];
    if (kx == Layout::bitset && ky == Layout::bitset) {
      auto bx = x.bitset_block(i), by = y.bitset_block(j);
      std::uint32_t count = 0;
      for (std::uint32_t w = 0; w < per_block; ++w) {
        words[w] = bx[w] & by[w];
        count += static_cast<std::uint32_t>(std::popcount(words[w]));
      }
      work += per_block;
      if (count != 0) {
        out.bases.push_back(base);
        out.kinds.push_back(Layout::bitset);
        out.begin.push_back(static_cast<std::uint32_t>(out.words.size()));
        out.words.insert(out.words.end(), words.begin(), words.end());
        out.rank.push_back(out.rank.back() + count);
      }
    } else {
      scratch.clear();
      if (kx == Layout::uint && ky == Layout::uint) {
        auto ux = x.uint_block(i), uy = y.uint_block(j);
        uint_kernel(ux, uy, use_galloping(ux.size(), uy.size()) ? Algorithm::galloping : Algorithm::merge,
                    scratch, work);
      } else {
        auto ux = kx == Layout::uint ? x.uint_block(i) : y.uint_block(j);
        auto bw = kx == Layout::uint ? y.bitset_block(j) : x.bitset_block(i);
        for (Id v : ux) {
          ++work;
          Id rel = v - base;
          if ((bw[rel >> 6] >> (rel & 63)) & 1u) scratch.push_back(v);
        }
      }
      if (!scratch.empty()) {
        out.bases.push_back(base);
        out.kinds.push_back(Layout::uint);
        out.begin.push_back(static_cast<std::uint32_t>(out.values.size()));
        out.values.insert(out.values.end(), scratch.begin(), scratch.end());
        out.rank.push_back(out.rank.back() + static_cast<std::uint32_t>(scratch.size()));
      }
    }
    ++i;
    ++j;
  }
  return SetView::from_composite_data(std::move(out));
}

/// Composite x uint; slices the uint array per composite block.
inline SetView intersect_composite_uint(const CompositeData& x, std::span<const Id> u,
                                        std::uint64_t& work) {
  std::vector<Id> out;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < x.block_count() && pos < u.size(); ++b) {
    Id base = x.bases[b];
    std::uint64_t end = std::uint64_t{base} + x.block_bits;
    auto first = std::lower_bound(u.begin() + static_cast<std::ptrdiff_t>(pos), u.end(), base);
    auto last = std::lower_bound(first, u.end(), end,
                                 [](Id v, std::uint64_t e) { return std::uint64_t{v} < e; });
    work += 2;
    std::span<const Id> slice(first, last);
    pos = static_cast<std::size_t>(last - u.begin());
    if (slice.empty()) continue;
    if (x.kinds[b] == Layout::uint) {
      auto blk = x.uint_block(b);
      uint_kernel(blk, slice,
                  use_galloping(blk.size(), slice.size()) ? Algorithm::galloping : Algorithm::merge, out,
                  work);
    } else {
      auto bw = x.bitset_block(b);
      for (Id v : slice) {
        ++work;
        Id rel = v - base;
        if ((bw[rel >> 6] >> (rel & 63)) & 1u) out.push_back(v);
      }
    }
  }
  return SetView::make_uint(std::move(out));
}

/// Composite x bitset; keeps the composite block structure.
inline SetView intersect_composite_bitset(const CompositeData& x, const BitsetData& bs,
                                          std::uint64_t& work) {
  CompositeData out;
  out.block_bits = x.block_bits;
  const std::uint32_t per_block = x.words_per_block();
  std::vector<std::uint64_t> words(per_block);
  std::vector<Id> scratch;
  std::size_t cursor = 0;
  for (std::size_t b = 0; b < x.block_count() && cursor < bs.block_count(); ++b) {
    Id base = x.bases[b];
    if (x.kinds[b] == Layout::bitset) {
      auto bw = x.bitset_block(b);
      std::uint32_t count = 0;
      for (std::uint32_t w = 0; w < per_block; ++w) {
        words[w] = bw[w] & bitset_word_at(bs, base + 64 * w, cursor);
        count += static_cast<std::uint32_t>(std::popcount(words[w]));
      }
      work += per_block;
      if (count != 0) {
        out.bases.push_back(base);
        out.kinds.push_back(Layout::bitset);
        out.begin.push_back(static_cast<std::uint32_t>(out.words.size()));
        out.words.insert(out.words.end(), words.begin(), words.end());
        out.rank.push_back(out.rank.back() + count);
      }
    } else {
      scratch.clear();
      for (Id v : x.uint_block(b)) {
        ++work;
        if (bitset_probe(bs, v, cursor)) scratch.push_back(v);
      }
      if (!scratch.empty()) {
        out.bases.push_back(base);
        out.kinds.push_back(Layout::uint);
        out.begin.push_back(static_cast<std::uint32_t>(out.values.size()));
        out.values.insert(out.values.end(), scratch.begin(), scratch.end());
        out.rank.push_back(out.rank.back() + static_cast<std::uint32_t>(scratch.size()));
      }
    }
  }
  return SetView::from_composite_data(std::move(out));
}

}  // namespace detail

/// Dispatches on the layout pair. Result layouts: uint x anything -> uint,
/// bitset x bitset -> bitset, composite x {composite, bitset} -> composite.
inline SetView intersect(const SetView& a, const SetView& b, IntersectStats* stats = nullptr) {
  if (a.empty() || b.empty()) {
    if (stats) {
      *stats = {};
      stats->algorithm = Algorithm::galloping;
    }
    return {};
  }
  const Layout la = a.layout(), lb = b.layout();
  if (la == Layout::uint && lb == Layout::uint) return intersect_uint_uint(a, b, stats);
  if (la == Layout::bitset && lb == Layout::bitset) return intersect_bitset_bitset(a, b, stats);
  if (la == Layout::uint && lb == Layout::bitset) return intersect_uint_bitset(a, b, stats);
  if (la == Layout::bitset && lb == Layout::uint) return intersect_uint_bitset(b, a, stats);

  std::uint64_t work = 0;
  SetView result;
  if (la == Layout::composite && lb == Layout::composite &&
      a.composite().block_bits == b.composite().block_bits) {
    result = detail::intersect_composite_composite(a.composite(), b.composite(), work);
  } else if (la == Layout::composite && lb == Layout::uint) {
    result = detail::intersect_composite_uint(a.composite(), b.uint_values(), work);
  } else if (la == Layout::uint && lb == Layout::composite) {
    result = detail::intersect_composite_uint(b.composite(), a.uint_values(), work);
  } else if (la == Layout::composite && lb == Layout::bitset) {
    result = detail::intersect_composite_bitset(a.composite(), b.bitset(), work);
  } else if (la == Layout::bitset && lb == Layout::composite) {
    result = detail::intersect_composite_bitset(b.composite(), a.bitset(), work);
  } else {
    // Composites with different block sizes: fall back to the uint kernel.
    return intersect_uint_uint(SetView::make_uint(a.decode()), SetView::make_uint(b.decode()), stats);
  }
  if (stats) *stats = {work, Algorithm::composite, result.cardinality()};
  return result;
}

/// Accumulating counters across many kernel calls.
struct IntersectTotals {
  std::uint64_t calls = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t by_algorithm[6] = {};

  void add(const IntersectStats& s) {
    ++calls;
    comparisons += s.comparisons;
    ++by_algorithm[static_cast<std::size_t>(s.algorithm)];
  }
  void merge(const IntersectTotals& o) {
    calls += o.calls;
    comparisons += o.comparisons;
    for (std::size_t k = 0; k < 6; ++k) by_algorithm[k] += o.by_algorithm[k];
  }
};

/// Intersects all sets, smallest first. An empty input list is not allowed.
inline SetView intersect_all(std::span<const SetView* const> sets, IntersectTotals* totals = nullptr) {
  std::vector<const SetView*> order(sets.begin(), sets.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const SetView* x, const SetView* y) { return x->cardinality() < y->cardinality(); });
  SetView acc = *order.front();
  for (std::size_t k = 1; k < order.size() && !acc.empty(); ++k) {
    IntersectStats s;
    acc = intersect(acc, *order[k], totals ? &s : nullptr);
    if (totals) totals->add(s);
  }
  return acc;
}

}  // namespace hyperjoin
