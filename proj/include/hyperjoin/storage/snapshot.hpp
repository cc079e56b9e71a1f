#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperjoin/storage/catalog.hpp"

namespace hyperjoin {

/// Snapshot layout: one line of JSON describing the payload, then the raw
/// payload (dictionary strings, then each relation's ids and annotations in
/// little-endian order). Tries are rebuilt on load.
inline constexpr const char* snapshot_magic = "hyperjoin-snapshot";
inline constexpr int snapshot_version = 1;

namespace detail {

template <class T>
void write_pod(std::ostream& out, const T* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <class T>
void read_pod(std::istream& in, T* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw Error(ErrorKind::snapshot, "snapshot payload is truncated");
}

}  // namespace detail

inline void write_snapshot(const Catalog& catalog, const std::string& path, const nlohmann::json& config = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  nlohmann::json header;
  header["magic"] = snapshot_magic;
  header["version"] = snapshot_version;
  header["config"] = config;
  std::uint64_t dict_bytes = 0;
  for (const auto& v : catalog.dictionary().values()) dict_bytes += v.size() + 1;
  header["dictionary"] = {{"entries", catalog.dictionary().size()}, {"bytes", dict_bytes}};
  header["default_relation"] =
      catalog.default_relation() ? nlohmann::json(*catalog.default_relation()) : nlohmann::json(nullptr);
  nlohmann::json rels = nlohmann::json::array();
  for (const auto& [name, entry] : catalog.relations()) {
    rels.push_back({{"name", name},
                    {"arity", entry.arity},
                    {"rows", entry.data.rows},
                    {"annotated", entry.data.annotated()},
                    {"annotation_type", to_string(entry.annotation_type)}});
  }
  header["relations"] = rels;
  out << header.dump() << '\n';
  for (const auto& v : catalog.dictionary().values()) {
    out.write(v.data(), static_cast<std::streamsize>(v.size()));
    out.put('\0');
  }
  for (const auto& [name, entry] : catalog.relations()) {
    detail::write_pod(out, entry.data.data.data(), entry.data.data.size());
    if (entry.data.annotated()) detail::write_pod(out, entry.data.annotations.data(), entry.data.rows);
  }
  if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

/// Reads a snapshot into `catalog` (which should be empty). Returns the stored config.
inline nlohmann::json read_snapshot(Catalog& catalog, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("magic", "") != snapshot_magic)
    throw Error(ErrorKind::snapshot, "'" + path + "' is not a snapshot");
  if (header.value("version", 0) != snapshot_version)
    throw Error(ErrorKind::snapshot, "unsupported snapshot version " + header["version"].dump());
  std::size_t entries = header["dictionary"]["entries"].get<std::size_t>();
  for (std::size_t i = 0; i < entries; ++i) {
    std::string value;
    std::getline(in, value, '\0');
    if (!in) throw Error(ErrorKind::snapshot, "snapshot dictionary is truncated");
    catalog.dictionary().encode(value);
  }
  for (const auto& rel : header["relations"]) {
    EncodedRelation data;
    data.arity = rel["arity"].get<std::size_t>();
    data.rows = rel["rows"].get<std::size_t>();
    data.data.resize(data.arity * data.rows);
    detail::read_pod(in, data.data.data(), data.data.size());
    if (rel["annotated"].get<bool>()) {
      data.annotations.resize(data.rows);
      detail::read_pod(in, data.annotations.data(), data.rows);
    }
    for (Id v : data.data)
      if (v >= catalog.dictionary().size()) throw Error(ErrorKind::snapshot, "snapshot id out of range");
    std::string type = rel.value("annotation_type", "none");
    ValueType vt = type == "int" ? ValueType::int_
                   : type == "long" ? ValueType::long_
                   : type == "float" ? ValueType::float_
                                     : ValueType::none;
    catalog.put(rel["name"].get<std::string>(), data, vt);
  }
  if (header["default_relation"].is_string())
    catalog.set_default_relation(header["default_relation"].get<std::string>());
  return header["config"];
}

}  // namespace hyperjoin
