#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperjoin/executor/engine.hpp"

namespace hyperjoin {

inline constexpr int metrics_schema_version = 1;

/// Integers for integral types, otherwise the shortest text that reads back
/// to the same double.
inline std::string format_value(double v, ValueType type) {
  if (is_integral(type)) return std::to_string(static_cast<long long>(std::nearbyint(v)));
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

struct DecodedRow {
  std::vector<std::string> keys;
  double value = 1.0;
};

/// Rows of `name` with decoded keys, sorted by key text so output does not
/// depend on the id ordering.
inline std::vector<DecodedRow> decoded_rows(const Catalog& catalog, const std::string& name) {
  std::vector<DecodedRow> rows;
  const RelationEntry* entry = catalog.find(name);
  if (!entry) return rows;
  for (std::size_t r = 0; r < entry->data.rows; ++r) {
    DecodedRow row;
    for (Id id : entry->data.row(r)) row.keys.push_back(catalog.dictionary().decode(id));
    if (entry->data.annotated()) row.value = entry->data.annotations[r];
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const DecodedRow& a, const DecodedRow& b) { return a.keys < b.keys; });
  return rows;
}

/// Tab-separated rows, annotation last. A scalar prints as its value alone
/// and a 0-ary unannotated head as true/false.
inline std::string format_tsv(const Catalog& catalog, const std::string& name, ValueType type) {
  const RelationEntry* entry = catalog.find(name);
  const bool annotated = type != ValueType::none;
  std::string out;
  if (entry && entry->arity == 0 && !annotated) return entry->data.rows ? "true\n" : "false\n";
  for (const auto& row : decoded_rows(catalog, name)) {
    std::string line;
    for (std::size_t k = 0; k < row.keys.size(); ++k) line += (k ? "\t" : "") + row.keys[k];
    if (annotated) line += (row.keys.empty() ? "" : "\t") + format_value(row.value, type);
    out += line + "\n";
  }
  return out;
}

inline nlohmann::json result_json(const Catalog& catalog, const std::string& name, ValueType type) {
  const RelationEntry* entry = catalog.find(name);
  nlohmann::json j;
  j["relation"] = name;
  j["arity"] = entry ? entry->arity : 0;
  j["annotation_type"] = to_string(type);
  auto value = [&](double v) {
    return is_integral(type) ? nlohmann::json(static_cast<long long>(std::nearbyint(v))) : nlohmann::json(v);
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : decoded_rows(catalog, name)) {
    nlohmann::json r;
    r["keys"] = row.keys;
    if (type != ValueType::none) r["value"] = value(row.value);
    rows.push_back(r);
  }
  j["rows"] = rows;
  if (entry && entry->arity == 0) {
    if (type == ValueType::none) j["scalar"] = entry->data.rows > 0;
    else if (entry->data.rows) j["scalar"] = value(entry->data.annotations.empty() ? 1.0 : entry->data.annotations[0]);
  }
  return j;
}

inline nlohmann::json intersections_json(const IntersectTotals& t) {
  nlohmann::json by = nlohmann::json::object();
  for (std::size_t a = 0; a < std::size(t.by_algorithm); ++a)
    if (t.by_algorithm[a]) by[to_string(static_cast<Algorithm>(a))] = t.by_algorithm[a];
  return {{"calls", t.calls}, {"comparisons", t.comparisons}, {"by_algorithm", by}};
}

/// Work counters, then wall time; `with_time` false leaves only the
/// deterministic fields.
inline nlohmann::json metrics_json(const ExecMetrics& m, bool with_time = true) {
  nlohmann::json j;
  j["schema_version"] = metrics_schema_version;
  j["iterations"] = m.iterations;
  j["node_evaluations"] = m.node_evaluations;
  j["intersections"] = intersections_json(m.intersections);
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : m.rules) {
    nlohmann::json rj;
    rj["head"] = r.head;
    rj["mode"] = r.mode;
    rj["fhw"] = r.fhw.to_string();
    rj["plan_nodes"] = r.plan_nodes;
    rj["rounds"] = r.rounds;
    rj["node_evaluations"] = r.node_evaluations;
    rj["iterations"] = r.iterations;
    rj["output_tuples"] = r.output_tuples;
    rj["intersections"] = intersections_json(r.intersections);
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : r.nodes)
      nodes.push_back({{"node", n.node},
                       {"evaluated", n.evaluated},
                       {"dedup_of", n.dedup_of >= 0 ? nlohmann::json(n.dedup_of) : nlohmann::json(nullptr)},
                       {"result_tuples", n.result_tuples},
                       {"iterations", n.iterations}});
    rj["nodes"] = nodes;
    if (with_time) rj["wall_ms"] = r.wall_ms;
    rules.push_back(rj);
  }
  j["rules"] = rules;
  if (with_time) j["wall_ms"] = m.wall_ms;
  return j;
}

}  // namespace hyperjoin
