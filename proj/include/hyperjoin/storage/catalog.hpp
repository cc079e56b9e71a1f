#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hyperjoin/storage/dictionary.hpp"
#include "hyperjoin/storage/ordering.hpp"
#include "hyperjoin/storage/relation_io.hpp"
#include "hyperjoin/storage/trie.hpp"

namespace hyperjoin {

enum class ValueType : std::uint8_t { none, int_, long_, float_ };

inline const char* to_string(ValueType t) {
  switch (t) {
    case ValueType::none: return "none";
    case ValueType::int_: return "int";
    case ValueType::long_: return "long";
    case ValueType::float_: return "float";
  }
  return "?";
}

inline bool is_integral(ValueType t) { return t == ValueType::int_ || t == ValueType::long_; }

struct RelationEntry {
  std::string name;
  std::size_t arity = 0;
  ValueType annotation_type = ValueType::none;
  /// Sorted, deduplicated tuples in source column order.
  EncodedRelation data;
  /// Tries keyed by attribute order.
  mutable std::map<std::vector<std::uint32_t>, std::shared_ptr<const Trie>> tries;
};

/// Named relations over one shared node dictionary, with tries per stored
/// attribute order. Binary relations always carry both orders.
class Catalog {
 public:
  Dictionary& dictionary() { return dictionary_; }
  const Dictionary& dictionary() const { return dictionary_; }

  const LayoutPolicy& policy() const { return policy_; }
  void set_policy(const LayoutPolicy& policy) {
    std::lock_guard lock(*mutex_);
    policy_ = policy;
    derived_.clear();
    for (auto& [name, entry] : relations_) {
      entry.tries.clear();
      index_defaults(entry);
    }
  }

  /// When false, requesting a trie order that was not built eagerly raises MissingIndex.
  bool on_demand_indexes = true;

  void set_default_relation(std::optional<std::string> name) { default_relation_ = std::move(name); }
  const std::optional<std::string>& default_relation() const { return default_relation_; }

  /// Stores (replacing) a relation; duplicates are removed.
  const RelationEntry& put(const std::string& name, const EncodedRelation& data,
                           ValueType annotation_type = ValueType::none) {
    RelationEntry entry;
    entry.name = name;
    entry.arity = data.arity;
    entry.annotation_type = annotation_type;
    std::vector<std::uint32_t> natural(data.arity);
    std::iota(natural.begin(), natural.end(), 0u);
    auto trie = std::make_shared<const Trie>(build_trie(data, natural, policy_));
    entry.data = trie->to_relation();
    entry.tries[natural] = trie;
    index_defaults(entry);
    std::lock_guard lock(*mutex_);
    derived_.clear();
    auto& slot = relations_[name];
    slot = std::move(entry);
    return slot;
  }

  void remove(const std::string& name) {
    std::lock_guard lock(*mutex_);
    relations_.erase(name);
    derived_.clear();
  }

  bool contains(const std::string& name) const { return relations_.count(name) != 0; }
  const RelationEntry* find(const std::string& name) const {
    auto it = relations_.find(name);
    return it == relations_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, RelationEntry>& relations() const { return relations_; }

  /// Name the atom `name` refers to: itself if stored, else the default relation.
  std::optional<std::string> resolve_name(const std::string& name) const {
    if (contains(name)) return name;
    if (default_relation_ && contains(*default_relation_)) return default_relation_;
    return std::nullopt;
  }

  const RelationEntry& resolve(const std::string& name, std::size_t arity) const {
    auto resolved = resolve_name(name);
    if (!resolved) throw Error(ErrorKind::unknown_relation, "relation '" + name + "' is not defined");
    const RelationEntry& entry = relations_.at(*resolved);
    if (entry.arity != arity)
      throw Error(ErrorKind::arity_mismatch, "relation '" + name + "' has arity " + std::to_string(entry.arity) +
                                                 ", atom uses " + std::to_string(arity));
    return entry;
  }

  /// Trie over `entry` in the given attribute order, built on first use.
  std::shared_ptr<const Trie> trie(const RelationEntry& entry, const std::vector<std::uint32_t>& order) const {
    std::lock_guard lock(*mutex_);
    auto it = entry.tries.find(order);
    if (it != entry.tries.end()) return it->second;
    if (!on_demand_indexes) {
      std::string text;
      for (auto c : order) text += std::to_string(c) + " ";
      throw Error(ErrorKind::missing_index, "relation '" + entry.name + "' has no index in order " + text);
    }
    auto trie = std::make_shared<const Trie>(build_trie(entry.data, order, policy_));
    entry.tries.emplace(order, trie);
    return trie;
  }

  /// Cache for tries over filtered or projected atom relations.
  std::shared_ptr<const Trie> derived_trie(const std::string& key, const std::function<Trie()>& build) const {
    {
      std::lock_guard lock(*mutex_);
      auto it = derived_.find(key);
      if (it != derived_.end()) return it->second;
    }
    auto trie = std::make_shared<const Trie>(build());
    std::lock_guard lock(*mutex_);
    return derived_.emplace(key, trie).first->second;
  }

  /// Renumbers every node id so that old id i becomes perm[i].
  void apply_permutation(const std::vector<Id>& perm) {
    dictionary_.apply_permutation(perm);
    std::map<std::string, RelationEntry> old = std::move(relations_);
    relations_.clear();
    for (auto& [name, entry] : old) {
      EncodedRelation data = std::move(entry.data);
      for (auto& v : data.data) v = perm[v];
      put(name, data, entry.annotation_type);
    }
  }

 private:
  void index_defaults(RelationEntry& entry) const {
    std::vector<std::uint32_t> natural(entry.arity);
    std::iota(natural.begin(), natural.end(), 0u);
    if (!entry.tries.count(natural))
      entry.tries[natural] = std::make_shared<const Trie>(build_trie(entry.data, natural, policy_));
    if (entry.arity == 2 && !entry.tries.count({1, 0}))
      entry.tries[{1, 0}] = std::make_shared<const Trie>(build_trie(entry.data, {1, 0}, policy_));
  }

  Dictionary dictionary_;
  LayoutPolicy policy_;
  std::map<std::string, RelationEntry> relations_;
  std::optional<std::string> default_relation_;
  mutable std::map<std::string, std::shared_ptr<const Trie>> derived_;
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

/// One input file and the relation it populates.
struct RelationSource {
  std::string name;
  std::string path;
  std::size_t arity = 2;
};

struct IngestOptions {
  OrderingStrategy ordering;
  bool symmetrize = false;
  /// Keep only src > dst edges of binary relations (after ordering).
  bool prune = false;
  bool allow_annotation = true;
};

/// Loads files into the catalog: encode, optionally symmetrize, order the
/// node ids over the union of binary relations, optionally prune, index.
inline void ingest(Catalog& catalog, const std::vector<RelationSource>& sources, const IngestOptions& options) {
  struct Pending {
    std::string name;
    EncodedRelation data;
  };
  std::vector<Pending> pending;
  for (const auto& src : sources) {
    LoadOptions load;
    load.allow_annotation = options.allow_annotation;
    RawRelation raw = load_relation(src.path, src.arity, load);
    EncodedRelation enc;
    enc.arity = src.arity;
    std::vector<Id> row(src.arity);
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
      for (std::size_t k = 0; k < src.arity; ++k) row[k] = catalog.dictionary().encode(raw.rows[r][k]);
      if (raw.has_annotation_column) enc.add(row, raw.annotations[r]); else enc.add(row);
      if (options.symmetrize && src.arity == 2 && row[0] != row[1]) {
        std::vector<Id> rev{row[1], row[0]};
        if (raw.has_annotation_column) enc.add(rev, raw.annotations[r]); else enc.add(rev);
      }
    }
    pending.push_back({src.name, std::move(enc)});
  }

  const std::size_t n = catalog.dictionary().size();
  if (options.ordering.kind != OrderingKind::identity && n > 0) {
    std::vector<Edge> edges;
    for (const auto& p : pending)
      if (p.data.arity == 2)
        for (std::size_t r = 0; r < p.data.rows; ++r) edges.emplace_back(p.data.row(r)[0], p.data.row(r)[1]);
    std::vector<Id> perm = order_nodes(Graph::from_edges(n, edges), options.ordering);
    catalog.apply_permutation(perm);
    for (auto& p : pending)
      for (auto& v : p.data.data) v = perm[v];
  }

  for (auto& p : pending) {
    if (options.prune && p.data.arity == 2) {
      EncodedRelation kept;
      kept.arity = 2;
      for (std::size_t r = 0; r < p.data.rows; ++r) {
        auto t = p.data.row(r);
        if (t[0] > t[1]) {
          if (p.data.annotated()) kept.add(t, p.data.annotations[r]); else kept.add(t);
        }
      }
      p.data = std::move(kept);
    }
    catalog.put(p.name, p.data, p.data.annotated() ? ValueType::float_ : ValueType::none);
  }
}

}  // namespace hyperjoin
