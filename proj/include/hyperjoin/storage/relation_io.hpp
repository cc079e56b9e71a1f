#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hyperjoin/common.hpp"

namespace hyperjoin {

/// Tuples as read from disk, before encoding. Duplicates are kept.
struct RawRelation {
  std::size_t arity = 0;
  std::vector<std::vector<std::string>> rows;
  /// One value per row when the input carried an annotation column.
  std::vector<double> annotations;
  bool has_annotation_column = false;
};

struct LoadOptions {
  /// Accept one extra numeric column per row as the tuple annotation.
  bool allow_annotation = false;
};

inline double parse_number(const std::string& text, const std::string& where) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorKind::io, where + ": annotation '" + text + "' is not a number");
  return value;
}

/// Parses whitespace separated rows; `#` lines and blank lines are skipped.
inline RawRelation parse_relation(std::istream& in, std::size_t arity, const std::string& source,
                                  const LoadOptions& options = {}) {
  RawRelation rel;
  rel.arity = arity;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    fields.clear();
    std::istringstream row(line);
    std::string field;
    while (row >> field) fields.push_back(field);
    bool with_annotation = options.allow_annotation && fields.size() == arity + 1;
    if (fields.size() != arity && !with_annotation)
      throw Error(ErrorKind::row_arity_mismatch, source + ":" + std::to_string(line_no) + ": expected " +
                                                     std::to_string(arity) + " fields, found " +
                                                     std::to_string(fields.size()));
    if (with_annotation) {
      if (rel.annotations.size() != rel.rows.size())
        throw Error(ErrorKind::row_arity_mismatch,
                    source + ":" + std::to_string(line_no) + ": annotation column missing on earlier rows");
      rel.annotations.push_back(parse_number(fields.back(), source + ":" + std::to_string(line_no)));
      fields.pop_back();
      rel.has_annotation_column = true;
    } else if (!rel.annotations.empty()) {
      throw Error(ErrorKind::row_arity_mismatch,
                  source + ":" + std::to_string(line_no) + ": annotation column missing");
    }
    rel.rows.push_back(fields);
  }
  return rel;
}

inline RawRelation load_relation(const std::string& path, std::size_t arity, const LoadOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return parse_relation(in, arity, path, options);
}

}  // namespace hyperjoin
