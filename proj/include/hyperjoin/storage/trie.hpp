#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperjoin/setkernel/layout.hpp"
#include "hyperjoin/setkernel/set_view.hpp"

namespace hyperjoin {

/// Dictionary-encoded tuples in row-major order with optional annotations.
struct EncodedRelation {
  std::size_t arity = 0;
  std::size_t rows = 0;
  std::vector<Id> data;
  /// Empty, or one value per row.
  std::vector<double> annotations;

  bool annotated() const { return !annotations.empty(); }
  std::span<const Id> row(std::size_t r) const { return {data.data() + r * arity, arity}; }

  void add(std::span<const Id> tuple) {
    data.insert(data.end(), tuple.begin(), tuple.end());
    ++rows;
  }
  void add(std::span<const Id> tuple, double annotation) {
    add(tuple);
    annotations.push_back(annotation);
  }
};

class Trie;
Trie build_trie(const EncodedRelation& relation, std::vector<std::uint32_t> attr_order,
                const LayoutPolicy& policy = {});

/// Multi-level sorted-set index. Level k holds one set per element of level
/// k - 1; the child set of the element at flattened position p of level k is
/// set p of level k + 1. A depth-0 trie holds at most one scalar annotation.
class Trie {
 public:
  Trie() = default;

  std::size_t depth() const { return attr_order_.size(); }
  const std::vector<std::uint32_t>& attr_order() const { return attr_order_; }
  bool annotated() const { return annotated_; }
  std::size_t tuple_count() const { return tuple_count_; }
  const LayoutPolicy& policy() const { return policy_; }
  std::optional<double> scalar() const { return scalar_; }

  const SetView& set(std::size_t level, std::uint64_t index) const { return levels_[level][index]; }
  std::size_t set_count(std::size_t level) const { return levels_[level].size(); }
  std::uint64_t child_index(std::size_t level, std::uint64_t set_index, std::uint32_t pos) const {
    return set_begin_[level][set_index] + pos;
  }

  /// Set index at level |prefix| for the prefix, if every element is present.
  std::optional<std::uint64_t> locate(std::span<const Id> prefix) const {
    if (depth() == 0 || prefix.size() >= depth()) return std::nullopt;
    std::uint64_t index = 0;
    for (std::size_t k = 0; k < prefix.size(); ++k) {
      auto pos = levels_[k][index].position(prefix[k]);
      if (!pos) return std::nullopt;
      index = child_index(k, index, *pos);
    }
    return index;
  }

  /// Children of `prefix`; the empty set when the prefix is absent.
  const SetView& lookup(std::span<const Id> prefix) const {
    static const SetView empty_set;
    auto index = locate(prefix);
    return index ? levels_[prefix.size()][*index] : empty_set;
  }

  /// Calls f(tuple, annotation) in trie order; tuple columns follow attr_order.
  template <class F>
  void for_each_tuple(F&& f) const {
    if (depth() == 0) {
      if (scalar_) f(std::span<const Id>{}, *scalar_);
      return;
    }
    std::vector<Id> tuple(depth());
    walk(0, 0, tuple, f);
  }

  /// Tuples in trie order, columns permuted back to the source column order.
  EncodedRelation to_relation() const {
    EncodedRelation rel;
    rel.arity = depth();
    std::vector<Id> row(depth());
    for_each_tuple([&](std::span<const Id> t, double a) {
      for (std::size_t k = 0; k < t.size(); ++k) row[attr_order_[k]] = t[k];
      if (annotated_) rel.add(row, a); else rel.add(row);
    });
    if (depth() == 0 && scalar_) {
      rel.rows = 1;
      rel.annotations = {*scalar_};
    }
    return rel;
  }

 private:
  friend Trie build_trie(const EncodedRelation&, std::vector<std::uint32_t>, const LayoutPolicy&);

  template <class F>
  void walk(std::size_t level, std::uint64_t index, std::vector<Id>& tuple, F& f) const {
    const SetView& s = levels_[level][index];
    std::uint32_t pos = 0;
    s.for_each([&](Id v) {
      tuple[level] = v;
      if (level + 1 == depth()) {
        f(std::span<const Id>(tuple), annotated_ ? s.assoc_at(pos, v) : 1.0);
      } else {
        walk(level + 1, child_index(level, index, pos), tuple, f);
      }
      ++pos;
    });
  }

  std::vector<std::uint32_t> attr_order_;
  std::vector<std::vector<SetView>> levels_;
  /// Elements before each set of a level (flattened positions).
  std::vector<std::vector<std::uint64_t>> set_begin_;
  bool annotated_ = false;
  std::size_t tuple_count_ = 0;
  std::optional<double> scalar_;
  LayoutPolicy policy_;
};

/// Sorts, deduplicates and indexes `relation` with columns taken in
/// `attr_order`. Duplicate keys must agree on their annotation.
inline Trie build_trie(const EncodedRelation& relation, std::vector<std::uint32_t> attr_order,
                       const LayoutPolicy& policy) {
  const std::size_t d = attr_order.size();
  if (d != relation.arity) throw Error(ErrorKind::arity_mismatch, "attribute order does not match relation arity");
  {
    std::vector<std::uint32_t> check = attr_order;
    std::sort(check.begin(), check.end());
    for (std::size_t k = 0; k < d; ++k)
      if (check[k] != k) throw Error(ErrorKind::usage, "attribute order is not a permutation");
  }
  Trie trie;
  trie.attr_order_ = std::move(attr_order);
  trie.annotated_ = relation.annotated();
  trie.policy_ = policy;
  if (d == 0) {
    if (relation.rows > 0) {
      double value = relation.annotated() ? relation.annotations[0] : 1.0;
      for (std::size_t r = 1; r < relation.rows; ++r)
        if (relation.annotated() && relation.annotations[r] != value)
          throw Error(ErrorKind::annotation_conflict, "scalar relation has conflicting values");
      trie.scalar_ = value;
      trie.tuple_count_ = 1;
    }
    return trie;
  }

  const std::size_t n = relation.rows;
  std::vector<Id> keys(n * d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < d; ++k) keys[r * d + k] = relation.data[r * d + trie.attr_order_[k]];
  auto key = [&](std::size_t r) { return std::span<const Id>(keys.data() + r * d, d); };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ka = key(a), kb = key(b);
    return std::lexicographical_compare(ka.begin(), ka.end(), kb.begin(), kb.end());
  });

  // Deduplicate; diff[i] is the first column where unique row i differs from row i - 1.
  std::vector<std::size_t> unique_rows;
  std::vector<std::size_t> diff;
  unique_rows.reserve(n);
  for (std::size_t r : order) {
    if (!unique_rows.empty()) {
      auto prev = key(unique_rows.back()), cur = key(r);
      std::size_t k = 0;
      while (k < d && prev[k] == cur[k]) ++k;
      if (k == d) {
        if (relation.annotated() && relation.annotations[unique_rows.back()] != relation.annotations[r])
          throw Error(ErrorKind::annotation_conflict, "duplicate tuple carries different annotations");
        continue;
      }
      diff.push_back(k);
    } else {
      diff.push_back(0);
    }
    unique_rows.push_back(r);
  }
  trie.tuple_count_ = unique_rows.size();

  trie.levels_.resize(d);
  trie.set_begin_.resize(d);
  std::vector<Id> elements;
  std::vector<double> assoc;
  for (std::size_t k = 0; k < d; ++k) {
    auto& sets = trie.levels_[k];
    auto& begin = trie.set_begin_[k];
    std::uint64_t flattened = 0;
    auto flush = [&]() {
      begin.push_back(flattened);
      SetView s = materialize_set(elements, policy);
      if (k + 1 == d && trie.annotated_) s.attach_assoc(assoc);
      flattened += elements.size();
      sets.push_back(std::move(s));
      elements.clear();
      assoc.clear();
    };
    for (std::size_t i = 0; i < unique_rows.size(); ++i) {
      if (i > 0 && diff[i] < k) flush();
      if (i == 0 || diff[i] <= k) {
        elements.push_back(key(unique_rows[i])[k]);
        if (k + 1 == d && trie.annotated_) assoc.push_back(relation.annotations[unique_rows[i]]);
      }
    }
    if (k == 0 || !elements.empty()) flush();
  }
  return trie;
}

/// Makes the elements of `xs` children of `prefix` (|prefix| = depth - 1).
/// Existing children are kept; associated values of `xs` become annotations.
inline void trie_append(Trie& trie, std::span<const Id> prefix, const SetView& xs) {
  if (xs.empty()) return;
  std::vector<Id> elements = xs.decode();
  if (!is_strictly_increasing(elements))
    throw Error(ErrorKind::order_violation, "appended set is not strictly increasing");
  if (prefix.size() + 1 != trie.depth())
    throw Error(ErrorKind::usage, "append prefix must address the leaf level");
  EncodedRelation rel = trie.to_relation();
  bool annotated = trie.annotated() || xs.has_assoc();
  if (annotated && !trie.annotated()) rel.annotations.assign(rel.rows, 1.0);
  std::vector<Id> row(trie.depth());
  const auto& order = trie.attr_order();
  for (std::uint32_t pos = 0; pos < elements.size(); ++pos) {
    for (std::size_t k = 0; k < prefix.size(); ++k) row[order[k]] = prefix[k];
    row[order.back()] = elements[pos];
    if (annotated) {
      rel.add(row, xs.has_assoc() ? xs.assoc_at(pos, elements[pos]) : 1.0);
    } else {
      rel.add(row);
    }
  }
  // Re-appending an existing child replaces its annotation.
  if (annotated) {
    EncodedRelation merged;
    merged.arity = rel.arity;
    std::vector<std::pair<std::vector<Id>, std::size_t>> seen;
    for (std::size_t r = rel.rows; r-- > 0;) {
      std::vector<Id> t(rel.row(r).begin(), rel.row(r).end());
      seen.emplace_back(std::move(t), r);
    }
    std::stable_sort(seen.begin(), seen.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (i > 0 && seen[i].first == seen[i - 1].first) continue;
      merged.add(seen[i].first, rel.annotations[seen[i].second]);
    }
    rel = std::move(merged);
  }
  trie = build_trie(rel, trie.attr_order(), trie.policy());
}

/// Convenience overload: trie_lookup as a free function.
inline const SetView& trie_lookup(const Trie& trie, std::span<const Id> prefix) { return trie.lookup(prefix); }

}  // namespace hyperjoin
