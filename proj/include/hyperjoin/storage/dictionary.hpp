#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperjoin/common.hpp"

namespace hyperjoin {

/// Bijection between raw values and dense ids in [0, size()).
class Dictionary {
 public:
  Id encode(const std::string& value) {
    auto [it, inserted] = ids_.try_emplace(value, static_cast<Id>(values_.size()));
    if (inserted) {
      if (values_.size() >= std::numeric_limits<Id>::max())
        throw Error(ErrorKind::overflow, "more than 2^32 distinct values");
      values_.push_back(value);
    }
    return it->second;
  }

  std::optional<Id> find(const std::string& value) const {
    auto it = ids_.find(value);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& decode(Id id) const { return values_.at(id); }
  std::size_t size() const { return values_.size(); }
  const std::vector<std::string>& values() const { return values_; }

  /// Renumbers ids so that old id i becomes perm[i].
  void apply_permutation(std::span<const Id> perm) {
    if (perm.size() != values_.size())
      throw Error(ErrorKind::usage, "permutation size does not match dictionary");
    std::vector<std::string> next(values_.size());
    for (std::size_t i = 0; i < perm.size(); ++i) next.at(perm[i]) = std::move(values_[i]);
    values_ = std::move(next);
    for (std::size_t i = 0; i < values_.size(); ++i) ids_[values_[i]] = static_cast<Id>(i);
  }

 private:
  std::vector<std::string> values_;
  std::unordered_map<std::string, Id> ids_;
};

/// Ids in first-seen order, then remapped through `perm` when given.
inline Dictionary build_dictionary(std::span<const std::string> values,
                                   std::optional<std::span<const Id>> perm = std::nullopt) {
  Dictionary dict;
  for (const auto& v : values) dict.encode(v);
  if (perm) dict.apply_permutation(*perm);
  return dict;
}

}  // namespace hyperjoin
