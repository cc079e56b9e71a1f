// Command-line entry point: load datasets into snapshots, run, explain and
// benchmark queries. Exit codes: 0 success, 1 runtime error, 2 usage or
// query error.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hyperjoin/executor/output.hpp"
#include "hyperjoin/planner/explain.hpp"
#include "hyperjoin/setkernel/oracle_optimizer.hpp"
#include "hyperjoin/storage/snapshot.hpp"

namespace hj = hyperjoin;
using nlohmann::json;

namespace {

constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

/// Errors in the query text or the invocation, as opposed to failures while
/// loading or evaluating.
bool is_usage_error(hj::ErrorKind k) {
  switch (k) {
    case hj::ErrorKind::syntax:
    case hj::ErrorKind::usage:
    case hj::ErrorKind::unknown_relation:
    case hj::ErrorKind::arity_mismatch:
    case hj::ErrorKind::unsafe_head_variable:
    case hj::ErrorKind::type_mismatch:
    case hj::ErrorKind::query_too_large:
      return true;
    default:
      return false;
  }
}

struct Config {
  std::vector<std::string> relations;
  std::string dataset;
  bool symmetric = false;
  std::string snapshot;
  std::string ordering = "identity";
  bool prune = false;
  std::uint64_t seed = 0;
  std::string layout = "set";
  std::size_t threads = 1;
  std::string output = "tsv";
  std::string query_file;
  std::string program;
  bool no_ghd = false;
  bool no_dedup = false;
  bool no_pushdown = false;
  bool naive = false;
  bool metrics = false;
  std::size_t repeat = 7;
};

std::vector<hj::RelationSource> sources(const Config& c) {
  std::vector<hj::RelationSource> out;
  if (!c.dataset.empty()) out.push_back({"Edge", c.dataset, 2});
  for (const auto& spec : c.relations) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw hj::Error(hj::ErrorKind::usage, "expected NAME=PATH[:ARITY], got '" + spec + "'");
    hj::RelationSource s{spec.substr(0, eq), spec.substr(eq + 1), 2};
    if (auto colon = s.path.rfind(':'); colon != std::string::npos) {
      const std::string arity = s.path.substr(colon + 1);
      if (!arity.empty() && std::all_of(arity.begin(), arity.end(), ::isdigit)) {
        s.arity = std::stoul(arity);
        s.path.resize(colon);
      }
    }
    out.push_back(s);
  }
  return out;
}

json load_config(const Config& c) {
  return {{"ordering", c.ordering}, {"prune", c.prune}, {"seed", c.seed}, {"symmetric", c.symmetric}};
}

void ingest_into(hj::Catalog& cat, const Config& c) {
  auto srcs = sources(c);
  hj::IngestOptions opts;
  opts.ordering = {hj::parse_ordering(c.ordering), c.seed};
  opts.prune = c.prune;
  opts.symmetrize = c.symmetric;
  hj::ingest(cat, srcs, opts);
  if (cat.contains("Edge")) cat.set_default_relation("Edge");
  else
    for (const auto& s : srcs)
      if (s.arity == 2) {
        cat.set_default_relation(s.name);
        break;
      }
}

/// Catalog from a snapshot or from raw files. Without either (explain only),
/// an empty binary Edge relation stands in so rules still validate.
void open_catalog(hj::Catalog& cat, const Config& c, bool allow_empty) {
  if (!c.snapshot.empty() && (!c.dataset.empty() || !c.relations.empty()))
    throw hj::Error(hj::ErrorKind::usage, "give either --snapshot or dataset files, not both");
  if (!c.snapshot.empty()) {
    hj::read_snapshot(cat, c.snapshot);
  } else if (!c.dataset.empty() || !c.relations.empty()) {
    ingest_into(cat, c);
  } else if (allow_empty) {
    hj::EncodedRelation empty;
    empty.arity = 2;
    cat.put("Edge", empty);
    cat.set_default_relation("Edge");
  } else {
    throw hj::Error(hj::ErrorKind::usage, "no data: give --snapshot, --dataset or --relation");
  }
}

void apply_layout(hj::Catalog& cat, const std::string& layout) {
  hj::LayoutPolicy policy;
  policy.granularity = hj::parse_granularity(layout);
  cat.set_policy(policy);
}

std::string program_text(const Config& c) {
  if (!c.program.empty() && !c.query_file.empty())
    throw hj::Error(hj::ErrorKind::usage, "give either --query or --program, not both");
  if (!c.program.empty()) return c.program;
  if (c.query_file.empty()) throw hj::Error(hj::ErrorKind::usage, "no query: give --query FILE or --program TEXT");
  std::ifstream in(c.query_file);
  if (!in) throw hj::Error(hj::ErrorKind::io, "cannot open '" + c.query_file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

hj::ExecOptions exec_options(const Config& c) {
  hj::ExecOptions o;
  o.plan.ghd = !c.no_ghd;
  o.plan.dedup = !c.no_dedup;
  o.plan.pushdown = !c.no_pushdown;
  o.threads = std::max<std::size_t>(1, c.threads);
  o.force_naive = c.naive;
  return o;
}

int cmd_load(const Config& c) {
  if (c.snapshot.empty()) throw hj::Error(hj::ErrorKind::usage, "load needs --snapshot OUT");
  if (c.dataset.empty() && c.relations.empty()) throw hj::Error(hj::ErrorKind::usage, "load needs --dataset or --relation");
  hj::Catalog cat;
  ingest_into(cat, c);
  hj::write_snapshot(cat, c.snapshot, load_config(c));
  json summary = json::array();
  for (const auto& [name, entry] : cat.relations())
    summary.push_back({{"relation", name}, {"arity", entry.arity}, {"rows", entry.data.rows}});
  std::cout << json{{"snapshot", c.snapshot}, {"nodes", cat.dictionary().size()}, {"relations", summary}}.dump()
            << "\n";
  return 0;
}

int cmd_query(const Config& c) {
  if (c.layout == "oracle") throw hj::Error(hj::ErrorKind::usage, "--layout oracle is only valid for bench");
  const std::string text = program_text(c);
  hj::Catalog cat;
  open_catalog(cat, c, false);
  apply_layout(cat, c.layout);
  auto result = hj::execute(text, cat, exec_options(c));
  if (c.output == "json") {
    json j = {{"result", hj::result_json(cat, result.relation, result.type)}};
    if (c.metrics) j["metrics"] = hj::metrics_json(result.metrics);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << hj::format_tsv(cat, result.relation, result.type);
    if (c.metrics) std::cerr << hj::metrics_json(result.metrics).dump() << "\n";
  }
  return 0;
}

int cmd_explain(const Config& c) {
  const std::string text = program_text(c);
  hj::Catalog cat;
  open_catalog(cat, c, true);
  auto rules = hj::validate(hj::parse_program(text), cat);
  hj::PlanOptions po = exec_options(c).plan;
  json all = json::array();
  for (const auto& rule : rules) {
    hj::Plan plan = hj::plan_rule(rule, po);
    if (c.output == "json") all.push_back(hj::explain_json(rule, plan));
    else std::cout << hj::explain_text(rule, plan) << "\n";
  }
  if (c.output == "json") std::cout << all.dump(2) << "\n";
  return 0;
}

/// Intersections a two-hop join performs: the out-neighbour sets of both ends
/// of each edge of the default relation, sampled down to `cap` pairs.
std::vector<std::pair<std::vector<hj::Id>, std::vector<hj::Id>>> neighbour_workload(const hj::Catalog& cat,
                                                                                     std::uint64_t seed,
                                                                                     std::size_t cap) {
  std::vector<std::pair<std::vector<hj::Id>, std::vector<hj::Id>>> out;
  if (!cat.default_relation() || !cat.contains(*cat.default_relation())) return out;
  const auto& data = cat.find(*cat.default_relation())->data;
  if (data.arity != 2) return out;
  std::map<hj::Id, std::vector<hj::Id>> adj;
  for (std::size_t r = 0; r < data.rows; ++r) adj[data.row(r)[0]].push_back(data.row(r)[1]);
  std::vector<std::size_t> rows(data.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (rows.size() > cap) {
    std::mt19937_64 rng(seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(cap);
    std::sort(rows.begin(), rows.end());
  }
  for (std::size_t r : rows) {
    auto a = adj.find(data.row(r)[0]), b = adj.find(data.row(r)[1]);
    if (a != adj.end() && b != adj.end()) out.emplace_back(a->second, b->second);
  }
  return out;
}

int cmd_bench(const Config& c) {
  if (c.repeat == 0) throw hj::Error(hj::ErrorKind::usage, "--repeat must be positive");
  const std::string text = program_text(c);
  hj::Catalog cat;
  open_catalog(cat, c, false);
  const bool oracle = c.layout == "oracle";
  apply_layout(cat, oracle ? "set" : c.layout);
  const hj::ExecOptions options = exec_options(c);

  std::vector<double> timings;
  std::optional<hj::ExecResult> first;
  for (std::size_t i = 0; i < c.repeat; ++i) {
    auto r = hj::execute(text, cat, options);
    timings.push_back(r.metrics.wall_ms);
    if (!first) first = std::move(r);
  }
  // Protocol: drop the fastest and slowest run when there are at least three.
  std::vector<double> kept = timings;
  std::sort(kept.begin(), kept.end());
  if (kept.size() >= 3) kept = std::vector<double>(kept.begin() + 1, kept.end() - 1);
  const double mean = std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());

  json report;
  report["query"] = c.query_file.empty() ? "<program>" : c.query_file;
  report["repeat"] = c.repeat;
  report["timings_ms"] = timings;
  report["averaged"] = kept.size();
  report["mean_ms"] = mean;
  report["threads"] = options.threads;
  report["layout"] = c.layout;
  report["metrics"] = hj::metrics_json(first->metrics, false);

  if (oracle) {
    json layouts = json::object();
    for (auto g : {hj::Granularity::relation, hj::Granularity::set, hj::Granularity::block}) {
      apply_layout(cat, hj::to_string(g));
      auto r = hj::execute(text, cat, options);
      layouts[hj::to_string(g)] = {{"wall_ms", r.metrics.wall_ms},
                                    {"intersections", hj::intersections_json(r.metrics.intersections)}};
    }
    report["granularities"] = layouts;
    auto rep = hj::oracle_optimize(neighbour_workload(cat, c.seed, 20000));
    json rel = json::object(), best = json::object();
    for (auto g : {hj::Granularity::relation, hj::Granularity::set, hj::Granularity::block})
      rel[hj::to_string(g)] = rep.relative(g);
    for (std::size_t k = 0; k < hj::combination_count; ++k)
      best[hj::to_string(static_cast<hj::Combination>(k))] = rep.best_count[k];
    report["oracle"] = {{"pairs", rep.pairs.size()}, {"oracle_cost", rep.oracle_total}, {"relative_cost", rel},
                        {"best_combination", best}};
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

void data_options(CLI::App* app, Config& c) {
  app->add_option("--snapshot", c.snapshot, "Snapshot file");
  app->add_option("--dataset", c.dataset, "Edge list loaded as relation Edge");
  app->add_option("--relation", c.relations, "Extra relation NAME=PATH[:ARITY]");
  app->add_flag("--symmetric", c.symmetric, "Add the reverse of every binary tuple");
  app->add_option("--ordering", c.ordering, "Node ordering")
      ->check(CLI::IsMember({"identity", "random", "bfs", "degree", "revdegree", "strongruns", "shingle", "hybrid"}));
  app->add_flag("--prune", c.prune, "Keep only src > dst edges after ordering");
  app->add_option("--seed", c.seed, "Seed for random ordering and sampling");
}

void query_options(CLI::App* app, Config& c) {
  app->add_option("-q,--query", c.query_file, "Query program file");
  app->add_option("-e,--program", c.program, "Query program text");
  app->add_flag("--no-ghd", c.no_ghd, "Force the single-node plan");
  app->add_flag("--no-dedup", c.no_dedup, "Evaluate identical plan nodes separately");
  app->add_flag("--no-pushdown", c.no_pushdown, "Plan selections without pushdown");
  app->add_option("--output", c.output, "Output format")->check(CLI::IsMember({"tsv", "json"}));
}

void exec_flags(CLI::App* app, Config& c) {
  app->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  app->add_flag("--naive", c.naive, "Force naive recursion");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case optimal join engine"};
  app.require_subcommand(1);
  Config c;

  auto* load = app.add_subcommand("load", "Ingest datasets and write a snapshot");
  data_options(load, c);

  auto* query = app.add_subcommand("query", "Run a query program and print the last rule's result");
  data_options(query, c);
  query_options(query, c);
  exec_flags(query, c);
  query->add_option("--layout", c.layout, "Set layout granularity")
      ->check(CLI::IsMember({"relation", "set", "block", "oracle"}));
  query->add_flag("--metrics", c.metrics, "Emit execution metrics as JSON");

  auto* explain = app.add_subcommand("explain", "Print the plan of every rule");
  data_options(explain, c);
  query_options(explain, c);

  auto* bench = app.add_subcommand("bench", "Time a query program");
  data_options(bench, c);
  query_options(bench, c);
  exec_flags(bench, c);
  bench->add_option("--layout", c.layout, "Set layout granularity, or oracle to compare all")
      ->check(CLI::IsMember({"relation", "set", "block", "oracle"}));
  bench->add_option("--repeat", c.repeat, "Repetitions; the fastest and slowest are dropped");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : exit_usage;
  }

  try {
    if (*load) return cmd_load(c);
    if (*query) return cmd_query(c);
    if (*explain) return cmd_explain(c);
    if (*bench) return cmd_bench(c);
  } catch (const hj::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_usage_error(e.kind()) ? exit_usage : exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_usage;
}
