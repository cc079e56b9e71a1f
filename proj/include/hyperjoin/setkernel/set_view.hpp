#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperjoin/common.hpp"

namespace hyperjoin {

enum class Layout : std::uint8_t { uint, bitset, composite };

inline const char* to_string(Layout layout) {
  switch (layout) {
    case Layout::uint: return "uint";
    case Layout::bitset: return "bitset";
    case Layout::composite: return "composite";
  }
  return "?";
}

inline bool is_strictly_increasing(std::span<const Id> ids) {
  return std::adjacent_find(ids.begin(), ids.end(),
                            [](Id a, Id b) { return a >= b; }) == ids.end();
}

/// Offsets plus bit blocks. Offsets are multiples of 64, so every block is
/// word aligned and two bitsets can be ANDed word for word without shifting.
struct BitsetData {
  /// Nonzero when all blocks have this size and offsets are multiples of it.
  std::uint32_t block_bits = 0;
  std::vector<Id> offsets;
  std::vector<std::uint32_t> word_begin{0};
  std::vector<std::uint64_t> words;
  /// Set bits before each word; size words.size() + 1.
  std::vector<std::uint32_t> rank{0};

  std::size_t block_count() const { return offsets.size(); }
  std::uint32_t block_words(std::size_t b) const { return word_begin[b + 1] - word_begin[b]; }
  std::uint64_t block_end(std::size_t b) const {
    return std::uint64_t{offsets[b]} + 64ull * block_words(b);
  }
};

/// Fixed-size blocks over the id domain; each block is a uint run or a bitmap.
struct CompositeData {
  std::uint32_t block_bits = 256;
  std::vector<Id> bases;
  std::vector<Layout> kinds;
  /// Start index into values (uint blocks) or words (bitset blocks).
  std::vector<std::uint32_t> begin;
  /// Elements before each block; size bases.size() + 1.
  std::vector<std::uint32_t> rank{0};
  std::vector<Id> values;
  std::vector<std::uint64_t> words;

  std::size_t block_count() const { return bases.size(); }
  std::uint32_t block_cardinality(std::size_t b) const { return rank[b + 1] - rank[b]; }
  std::uint32_t words_per_block() const { return block_bits / 64; }
  std::span<const Id> uint_block(std::size_t b) const {
    return {values.data() + begin[b], block_cardinality(b)};
  }
  std::span<const std::uint64_t> bitset_block(std::size_t b) const {
    return {words.data() + begin[b], words_per_block()};
  }
};

/// One sorted, duplicate-free set of ids in a uint, bitset or composite
/// layout, optionally carrying one associated value per element.
///
/// Associated values follow the layout: uint and composite sets index them by
/// element position (sparse vector), bitsets index them by id (dense vector).
class SetView {
 public:
  SetView() = default;

  static SetView make_uint(std::vector<Id> sorted) {
    SetView s;
    s.layout_ = Layout::uint;
    s.cardinality_ = static_cast<std::uint32_t>(sorted.size());
    s.values_ = std::move(sorted);
    return s;
  }

  /// Bitset over `sorted`. block_bits == 0 yields one span covering the whole
  /// range; otherwise block_bits must be a power of two >= 64.
  static SetView make_bitset(std::span<const Id> sorted, std::uint32_t block_bits = 0) {
    SetView s;
    s.layout_ = Layout::bitset;
    s.cardinality_ = static_cast<std::uint32_t>(sorted.size());
    if (sorted.empty()) return s;
    BitsetData& bs = s.bits_;
    if (block_bits == 0) {
      Id base = sorted.front() & ~Id{63};
      std::uint64_t nwords = (std::uint64_t{sorted.back()} - base) / 64 + 1;
      bs.offsets.push_back(base);
      bs.words.assign(nwords, 0);
      for (Id v : sorted) bs.words[(v - base) >> 6] |= 1ull << ((v - base) & 63);
      bs.word_begin.push_back(static_cast<std::uint32_t>(nwords));
    } else {
      bs.block_bits = block_bits;
      const std::uint32_t per_block = block_bits / 64;
      const Id mask = ~(block_bits - 1);
      for (Id v : sorted) {
        Id base = v & mask;
        if (bs.offsets.empty() || bs.offsets.back() != base) {
          bs.offsets.push_back(base);
          bs.words.resize(bs.words.size() + per_block, 0);
          bs.word_begin.push_back(static_cast<std::uint32_t>(bs.words.size()));
        }
        std::size_t w = bs.word_begin[bs.offsets.size() - 1] + ((v - base) >> 6);
        bs.words[w] |= 1ull << ((v - base) & 63);
      }
    }
    s.rebuild_rank();
    return s;
  }

  /// Bitset built from already computed blocks (used by intersections).
  static SetView from_bitset_data(BitsetData data) {
    SetView s;
    s.layout_ = Layout::bitset;
    s.bits_ = std::move(data);
    s.rebuild_rank();
    s.cardinality_ = s.bits_.rank.back();
    return s;
  }

  static SetView from_composite_data(CompositeData data) {
    SetView s;
    s.layout_ = Layout::composite;
    s.cardinality_ = data.rank.back();
    s.comp_ = std::move(data);
    return s;
  }

  Layout layout() const { return layout_; }
  std::uint32_t cardinality() const { return cardinality_; }
  std::size_t size() const { return cardinality_; }
  bool empty() const { return cardinality_ == 0; }

  Id min() const {
    switch (layout_) {
      case Layout::uint: return values_.front();
      case Layout::bitset: {
        for (std::size_t b = 0; b < bits_.block_count(); ++b)
          for (std::uint32_t w = bits_.word_begin[b]; w < bits_.word_begin[b + 1]; ++w)
            if (bits_.words[w] != 0)
              return bits_.offsets[b] + 64 * (w - bits_.word_begin[b]) +
                     static_cast<Id>(std::countr_zero(bits_.words[w]));
        break;
      }
      case Layout::composite: return first_in_composite_block(0);
    }
    return 0;
  }

  Id max() const {
    switch (layout_) {
      case Layout::uint: return values_.back();
      case Layout::bitset: {
        for (std::size_t b = bits_.block_count(); b-- > 0;)
          for (std::uint32_t w = bits_.word_begin[b + 1]; w-- > bits_.word_begin[b];)
            if (bits_.words[w] != 0)
              return bits_.offsets[b] + 64 * (w - bits_.word_begin[b]) + 63 -
                     static_cast<Id>(std::countl_zero(bits_.words[w]));
        break;
      }
      case Layout::composite: {
        std::size_t b = comp_.block_count() - 1;
        if (comp_.kinds[b] == Layout::uint) return comp_.uint_block(b).back();
        auto blk = comp_.bitset_block(b);
        for (std::size_t w = blk.size(); w-- > 0;)
          if (blk[w] != 0)
            return comp_.bases[b] + 64 * static_cast<Id>(w) + 63 -
                   static_cast<Id>(std::countl_zero(blk[w]));
        break;
      }
    }
    return 0;
  }

  /// max - min + 1, or 0 for the empty set.
  std::uint64_t universe_range() const {
    return empty() ? 0 : std::uint64_t{max()} - min() + 1;
  }

  /// Index of `v` among the set's elements, if present.
  std::optional<std::uint32_t> position(Id v) const {
    switch (layout_) {
      case Layout::uint: {
        auto it = std::lower_bound(values_.begin(), values_.end(), v);
        if (it == values_.end() || *it != v) return std::nullopt;
        return static_cast<std::uint32_t>(it - values_.begin());
      }
      case Layout::bitset: {
        auto b = bitset_block_of(v);
        if (!b) return std::nullopt;
        std::uint32_t rel = v - bits_.offsets[*b];
        std::uint32_t w = bits_.word_begin[*b] + (rel >> 6);
        std::uint64_t bit = 1ull << (rel & 63);
        if ((bits_.words[w] & bit) == 0) return std::nullopt;
        return bits_.rank[w] + static_cast<std::uint32_t>(std::popcount(bits_.words[w] & (bit - 1)));
      }
      case Layout::composite: {
        Id base = v & ~(comp_.block_bits - 1);
        auto it = std::lower_bound(comp_.bases.begin(), comp_.bases.end(), base);
        if (it == comp_.bases.end() || *it != base) return std::nullopt;
        std::size_t b = static_cast<std::size_t>(it - comp_.bases.begin());
        if (comp_.kinds[b] == Layout::uint) {
          auto blk = comp_.uint_block(b);
          auto jt = std::lower_bound(blk.begin(), blk.end(), v);
          if (jt == blk.end() || *jt != v) return std::nullopt;
          return comp_.rank[b] + static_cast<std::uint32_t>(jt - blk.begin());
        }
        auto blk = comp_.bitset_block(b);
        std::uint32_t rel = v - base;
        std::uint64_t bit = 1ull << (rel & 63);
        if ((blk[rel >> 6] & bit) == 0) return std::nullopt;
        std::uint32_t pos = comp_.rank[b];
        for (std::uint32_t w = 0; w < (rel >> 6); ++w) pos += std::popcount(blk[w]);
        return pos + static_cast<std::uint32_t>(std::popcount(blk[rel >> 6] & (bit - 1)));
      }
    }
    return std::nullopt;
  }

  bool contains(Id v) const { return position(v).has_value(); }

  /// Calls f(id) for every element in increasing order.
  template <class F>
  void for_each(F&& f) const {
    switch (layout_) {
      case Layout::uint:
        for (Id v : values_) f(v);
        break;
      case Layout::bitset:
        for (std::size_t b = 0; b < bits_.block_count(); ++b)
          for (std::uint32_t w = bits_.word_begin[b]; w < bits_.word_begin[b + 1]; ++w)
            for_each_bit(bits_.words[w], bits_.offsets[b] + 64 * (w - bits_.word_begin[b]), f);
        break;
      case Layout::composite:
        for (std::size_t b = 0; b < comp_.block_count(); ++b) {
          if (comp_.kinds[b] == Layout::uint) {
            for (Id v : comp_.uint_block(b)) f(v);
          } else {
            auto blk = comp_.bitset_block(b);
            for (std::size_t w = 0; w < blk.size(); ++w)
              for_each_bit(blk[w], comp_.bases[b] + 64 * static_cast<Id>(w), f);
          }
        }
        break;
    }
  }

  std::vector<Id> decode() const {
    if (layout_ == Layout::uint) return values_;
    std::vector<Id> out;
    out.reserve(cardinality_);
    for_each([&](Id v) { out.push_back(v); });
    return out;
  }

  bool has_assoc() const { return !assoc_.empty() || (cardinality_ == 0 && assoc_attached_); }

  /// Attaches one value per element, given in element order.
  void attach_assoc(std::span<const double> by_position) {
    if (by_position.size() != cardinality_)
      throw Error(ErrorKind::annotation_conflict,
                  "associated values do not match set cardinality (" +
                      std::to_string(by_position.size()) + " vs " + std::to_string(cardinality_) + ")");
    assoc_attached_ = true;
    if (layout_ == Layout::bitset) {
      if (cardinality_ == 0) return;
      assoc_base_ = bits_.offsets.front();
      assoc_.assign(std::uint64_t{max()} - assoc_base_ + 1, 0.0);
      std::size_t i = 0;
      for_each([&](Id v) { assoc_[v - assoc_base_] = by_position[i++]; });
    } else {
      assoc_.assign(by_position.begin(), by_position.end());
    }
  }

  double assoc_lookup(Id v) const {
    if (!assoc_attached_) throw Error(ErrorKind::element_absent, "set carries no associated values");
    auto pos = position(v);
    if (!pos) throw Error(ErrorKind::element_absent, "element " + std::to_string(v) + " not in set");
    return layout_ == Layout::bitset ? assoc_[v - assoc_base_] : assoc_[*pos];
  }

  /// Fast path when the caller already knows the element's position.
  double assoc_at(std::uint32_t pos, Id v) const {
    return layout_ == Layout::bitset ? assoc_[v - assoc_base_] : assoc_[pos];
  }

  std::span<const double> assoc_storage() const { return assoc_; }
  std::span<const Id> uint_values() const { return values_; }
  const BitsetData& bitset() const { return bits_; }
  const CompositeData& composite() const { return comp_; }

  /// Approximate payload size, used by reporting only.
  std::size_t payload_bytes() const {
    return values_.size() * sizeof(Id) + bits_.offsets.size() * sizeof(Id) +
           bits_.words.size() * 8 + comp_.values.size() * sizeof(Id) + comp_.words.size() * 8 +
           comp_.bases.size() * sizeof(Id);
  }

 private:
  template <class F>
  static void for_each_bit(std::uint64_t word, Id base, F& f) {
    while (word != 0) {
      int bit = std::countr_zero(word);
      f(base + static_cast<Id>(bit));
      word &= word - 1;
    }
  }

  std::optional<std::size_t> bitset_block_of(Id v) const {
    const auto& offs = bits_.offsets;
    if (offs.empty()) return std::nullopt;
    if (bits_.block_bits != 0) {
      Id base = v & ~(bits_.block_bits - 1);
      auto it = std::lower_bound(offs.begin(), offs.end(), base);
      if (it == offs.end() || *it != base) return std::nullopt;
      return static_cast<std::size_t>(it - offs.begin());
    }
    auto it = std::upper_bound(offs.begin(), offs.end(), v);
    if (it == offs.begin()) return std::nullopt;
    std::size_t b = static_cast<std::size_t>(it - offs.begin()) - 1;
    if (v >= bits_.block_end(b)) return std::nullopt;
    return b;
  }

  Id first_in_composite_block(std::size_t b) const {
    if (comp_.kinds[b] == Layout::uint) return comp_.uint_block(b).front();
    auto blk = comp_.bitset_block(b);
    for (std::size_t w = 0; w < blk.size(); ++w)
      if (blk[w] != 0) return comp_.bases[b] + 64 * static_cast<Id>(w) + std::countr_zero(blk[w]);
    return comp_.bases[b];
  }

  void rebuild_rank() {
    bits_.rank.assign(bits_.words.size() + 1, 0);
    for (std::size_t w = 0; w < bits_.words.size(); ++w)
      bits_.rank[w + 1] = bits_.rank[w] + static_cast<std::uint32_t>(std::popcount(bits_.words[w]));
    cardinality_ = bits_.rank.back();
  }

  Layout layout_ = Layout::uint;
  std::uint32_t cardinality_ = 0;
  std::vector<Id> values_;
  BitsetData bits_;
  CompositeData comp_;
  std::vector<double> assoc_;
  Id assoc_base_ = 0;
  bool assoc_attached_ = false;
};

}  // namespace hyperjoin
