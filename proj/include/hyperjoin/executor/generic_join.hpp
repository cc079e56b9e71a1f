#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <memory>
#include <numeric>
#include <thread>
#include <vector>

#include "hyperjoin/executor/semiring.hpp"
#include "hyperjoin/setkernel/intersect.hpp"
#include "hyperjoin/storage/trie.hpp"

namespace hyperjoin {

/// Outer-loop candidates per parallel work unit. Fixed so that results and
/// float sums do not depend on the worker count.
inline constexpr std::size_t join_chunk_size = 64;

/// A trie read by one loop nest: after `base_level` levels fixed by constants
/// at set `base_set`, level base_level + k binds variable vars[k].
struct Participant {
  std::shared_ptr<const Trie> trie;
  std::size_t base_level = 0;
  std::uint64_t base_set = 0;
  std::vector<int> vars;
  bool use_annotation = false;
  /// The constant prefix is absent, so nothing matches.
  bool empty = false;
  /// For variable-free participants: multiplies every binding.
  double factor = 1.0;
};

struct JoinSpec {
  /// Variables in loop order.
  std::vector<int> order;
  std::vector<Participant> participants;
  /// Levels below `split` are output columns; from `split` on, bindings are
  /// folded with the semiring instead of being emitted.
  std::size_t split = 0;
  Semiring semiring;
};

struct JoinOutput {
  /// Rows over order[0, split) in emission order, not yet combined.
  std::vector<Id> keys;
  std::vector<double> values;
  std::size_t arity = 0;
  std::uint64_t iterations = 0;
  IntersectTotals intersections;

  std::size_t rows() const { return values.size(); }
};

namespace detail {

struct LevelPart {
  std::size_t participant;
  std::size_t trie_level;
  bool last;
};

struct Accumulator {
  bool any = false;
  double value = 0.0;
};

class JoinRunner {
 public:
  explicit JoinRunner(const JoinSpec& spec) : spec_(spec), levels_(spec.order.size()) {
    for (std::size_t p = 0; p < spec.participants.size(); ++p) {
      const Participant& part = spec.participants[p];
      for (std::size_t k = 0; k < part.vars.size(); ++k) {
        auto it = std::find(spec.order.begin(), spec.order.end(), part.vars[k]);
        levels_[static_cast<std::size_t>(it - spec.order.begin())].push_back(
            {p, part.base_level + k, k + 1 == part.vars.size()});
      }
    }
    for (const auto& level : levels_) {
      bool annotated = false;
      for (const auto& lp : level)
        annotated |= lp.last && spec.participants[lp.participant].use_annotation && spec.semiring.uses_annotations();
      annotated_level_.push_back(annotated);
    }
  }

  JoinOutput run(std::size_t threads) const {
    JoinOutput out;
    out.arity = spec_.split;
    const Semiring& sr = spec_.semiring;
    double initial = sr.one;
    for (const auto& p : spec_.participants) {
      if (p.empty) return out;
      if (p.vars.empty() && p.use_annotation) initial = sr.times(initial, p.factor);
    }
    if (spec_.order.empty()) {
      out.values.push_back(initial);
      return out;
    }

    Worker root(*this);
    std::vector<const SetView*> sets = root.level_sets(0);
    SetView owned;
    const SetView* candidates = sets[0];
    if (sets.size() > 1) {
      owned = intersect_all(std::span<const SetView* const>(sets), &out.intersections);
      candidates = &owned;
    }
    std::vector<Id> outer = candidates->decode();
    const std::size_t chunks = (outer.size() + join_chunk_size - 1) / join_chunk_size;
    std::vector<ChunkResult> results(chunks);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      Worker w(*this);
      for (std::size_t c; (c = next.fetch_add(1)) < chunks;) {
        w.reset();
        std::size_t begin = c * join_chunk_size, end = std::min(outer.size(), begin + join_chunk_size);
        results[c] = w.run_outer(std::span<const Id>(outer.data() + begin, end - begin), initial);
      }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, chunks));
    if (workers == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    Accumulator total;
    for (auto& r : results) {
      out.iterations += r.iterations;
      out.intersections.merge(r.intersections);
      if (spec_.split == 0) {
        if (r.acc.any) total = total.any ? Accumulator{true, sr.plus(total.value, r.acc.value)} : r.acc;
      } else {
        out.keys.insert(out.keys.end(), r.keys.begin(), r.keys.end());
        out.values.insert(out.values.end(), r.values.begin(), r.values.end());
      }
    }
    if (spec_.split == 0 && total.any) out.values.push_back(total.value);
    return out;
  }

 private:
  struct ChunkResult {
    std::vector<Id> keys;
    std::vector<double> values;
    Accumulator acc;
    std::uint64_t iterations = 0;
    IntersectTotals intersections;
  };

  class Worker {
   public:
    explicit Worker(const JoinRunner& r) : r_(r), cur_(r.spec_.participants.size()), binding_(r.spec_.order.size()) {
      reset();
    }

    void reset() {
      for (std::size_t p = 0; p < cur_.size(); ++p) cur_[p] = r_.spec_.participants[p].base_set;
    }

    std::vector<const SetView*> level_sets(std::size_t level) const {
      std::vector<const SetView*> sets;
      for (const auto& lp : r_.levels_[level]) {
        const Participant& part = r_.spec_.participants[lp.participant];
        sets.push_back(&part.trie->set(lp.trie_level, cur_[lp.participant]));
      }
      return sets;
    }

    ChunkResult run_outer(std::span<const Id> outer, double initial) {
      out_ = ChunkResult{};
      if (r_.spec_.split == 0) {
        out_.acc = fold_values(0, outer, initial);
      } else {
        for_values(0, outer, initial, [&](double value) { emit_or_descend(1, value); });
      }
      return std::move(out_);
    }

   private:
    /// Binds each candidate of `level` in turn, updating participant cursors,
    /// and calls f(value) with the annotation-extended value; stops when f
    /// returns true.
    template <class F>
    void for_values(std::size_t level, std::span<const Id> candidates, double value, F&& f) {
      const auto& parts = r_.levels_[level];
      const Semiring& sr = r_.spec_.semiring;
      std::vector<const SetView*> sets = level_sets(level);
      std::vector<std::uint64_t> saved(parts.size());
      for (std::size_t j = 0; j < parts.size(); ++j) saved[j] = cur_[parts[j].participant];
      for (Id v : candidates) {
        ++out_.iterations;
        binding_[level] = v;
        double next = value;
        for (std::size_t j = 0; j < parts.size(); ++j) {
          const LevelPart& lp = parts[j];
          const Participant& part = r_.spec_.participants[lp.participant];
          const std::uint32_t pos = *sets[j]->position(v);
          if (lp.last) {
            if (part.use_annotation && sr.uses_annotations()) next = sr.times(next, sets[j]->assoc_at(pos, v));
          } else {
            cur_[lp.participant] = part.trie->child_index(lp.trie_level, saved[j], pos);
          }
        }
        bool stop;
        if constexpr (std::is_same_v<decltype(f(next)), bool>) stop = f(next);
        else {
          f(next);
          stop = false;
        }
        if (stop) break;
      }
      for (std::size_t j = 0; j < parts.size(); ++j) cur_[parts[j].participant] = saved[j];
    }

    /// Candidates of `level` under the current cursors.
    const SetView* candidates(std::size_t level, SetView& scratch) {
      std::vector<const SetView*> sets = level_sets(level);
      if (sets.size() == 1) return sets[0];
      scratch = intersect_all(std::span<const SetView* const>(sets), &out_.intersections);
      return &scratch;
    }

    void emit_or_descend(std::size_t level, double value) {
      const JoinSpec& spec = r_.spec_;
      if (level == spec.split) {
        Accumulator acc = level == spec.order.size() ? Accumulator{true, value} : fold(level, value);
        if (!acc.any) return;
        out_.keys.insert(out_.keys.end(), binding_.begin(), binding_.begin() + static_cast<std::ptrdiff_t>(level));
        out_.values.push_back(acc.value);
        return;
      }
      SetView scratch;
      std::vector<Id> values = candidates(level, scratch)->decode();
      for_values(level, values, value, [&](double next) { emit_or_descend(level + 1, next); });
    }

    Accumulator fold(std::size_t level, double value) {
      SetView scratch;
      const SetView* view = candidates(level, scratch);
      const Semiring& sr = r_.spec_.semiring;
      if (level + 1 == r_.spec_.order.size() && !r_.annotated_level_[level]) {
        ++out_.iterations;
        if (view->empty()) return {};
        return {true, sr.repeat(value, view->cardinality())};
      }
      std::vector<Id> values = view->decode();
      return fold_values(level, values, value);
    }

    Accumulator fold_values(std::size_t level, std::span<const Id> values, double value) {
      const Semiring& sr = r_.spec_.semiring;
      const bool last = level + 1 == r_.spec_.order.size();
      Accumulator acc;
      for_values(level, values, value, [&](double next) {
        Accumulator sub = last ? Accumulator{true, next} : fold(level + 1, next);
        if (sub.any) acc = acc.any ? Accumulator{true, sr.plus(acc.value, sub.value)} : sub;
        return acc.any && sr.add == Semiring::Add::first;
      });
      return acc;
    }

    const JoinRunner& r_;
    std::vector<std::uint64_t> cur_;
    std::vector<Id> binding_;
    ChunkResult out_;
  };

  const JoinSpec& spec_;
  std::vector<std::vector<LevelPart>> levels_;
  std::vector<bool> annotated_level_;
};

}  // namespace detail

/// Generic worst-case optimal join over the participants' tries: each level
/// intersects the participants' candidate sets for its variable and recurses.
/// The outer level is split into fixed chunks spread over `threads` workers.
inline JoinOutput generic_join(const JoinSpec& spec, std::size_t threads = 1) {
  return detail::JoinRunner(spec).run(threads);
}

}  // namespace hyperjoin
