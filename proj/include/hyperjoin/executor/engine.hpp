#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "hyperjoin/executor/generic_join.hpp"
#include "hyperjoin/executor/semiring.hpp"
#include "hyperjoin/frontend/parser.hpp"
#include "hyperjoin/planner/plan.hpp"

namespace hyperjoin {

struct ExecOptions {
  PlanOptions plan;
  std::size_t threads = 1;
  /// Evaluate fixpoint recursion naively even when seminaive applies.
  bool force_naive = false;
  std::size_t max_rounds = 10000;
};

struct NodeMetrics {
  int node = 0;
  int dedup_of = -1;
  bool evaluated = false;
  std::size_t result_tuples = 0;
  std::uint64_t iterations = 0;
};

struct RuleMetrics {
  std::string head;
  Rational fhw;
  std::size_t plan_nodes = 0;
  /// Per node of the last evaluation.
  std::vector<NodeMetrics> nodes;
  /// Generic-Join runs, summed over recursion rounds.
  std::size_t node_evaluations = 0;
  std::uint64_t iterations = 0;
  IntersectTotals intersections;
  std::size_t output_tuples = 0;
  std::size_t rounds = 0;
  std::string mode = "single";
  double wall_ms = 0.0;
};

struct ExecMetrics {
  std::vector<RuleMetrics> rules;
  std::uint64_t iterations = 0;
  std::size_t node_evaluations = 0;
  IntersectTotals intersections;
  double wall_ms = 0.0;
};

struct ExecResult {
  /// Head of the last rule: the program's answer.
  std::string relation;
  ValueType type = ValueType::none;
  ExecMetrics metrics;
};

namespace detail {

/// A node's output: one row per distinct binding of `vars`, with its value.
struct NodeResult {
  std::vector<int> vars;
  EncodedRelation rel;
  mutable std::map<std::vector<std::uint32_t>, std::shared_ptr<const Trie>> tries;

  std::shared_ptr<const Trie> trie(const std::vector<std::uint32_t>& columns, const LayoutPolicy& policy) const {
    auto it = tries.find(columns);
    if (it != tries.end()) return it->second;
    auto t = std::make_shared<const Trie>(build_trie(rel, columns, policy));
    return tries.emplace(columns, t).first->second;
  }

  int column(int var) const {
    auto it = std::find(vars.begin(), vars.end(), var);
    return it == vars.end() ? -1 : static_cast<int>(it - vars.begin());
  }
};

/// Sorts rows by key (stably) and folds equal keys with the semiring's plus.
inline EncodedRelation combine_rows(const std::vector<Id>& keys, const std::vector<double>& values,
                                    std::size_t arity, const Semiring& sr) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t r) { return std::span<const Id>(keys.data() + r * arity, arity); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ka = key(a), kb = key(b);
    return std::lexicographical_compare(ka.begin(), ka.end(), kb.begin(), kb.end());
  });
  EncodedRelation out;
  out.arity = arity;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = order[i];
    if (i > 0 && std::equal(key(r).begin(), key(r).end(), key(order[i - 1]).begin())) {
      out.annotations.back() = sr.plus(out.annotations.back(), values[r]);
    } else {
      out.add(key(r), values[r]);
    }
  }
  return out;
}

inline double scalar_value(const Catalog& catalog, const std::string& name) {
  const RelationEntry* entry = catalog.find(name);
  if (!entry || entry->data.rows == 0) throw Error(ErrorKind::eval, "scalar relation '" + name + "' is empty");
  return entry->data.annotated() ? entry->data.annotations[0] : 1.0;
}

inline double eval_expr(const Expr& e, std::optional<double> aggregate, const Catalog& catalog) {
  switch (e.kind) {
    case Expr::Kind::number:
      return e.number;
    case Expr::Kind::ref:
      return scalar_value(catalog, e.text);
    case Expr::Kind::aggregate:
      if (!aggregate) throw Error(ErrorKind::eval, "aggregate has no value");
      return *aggregate;
    case Expr::Kind::negate:
      return -eval_expr(*e.lhs, aggregate, catalog);
    case Expr::Kind::binary: {
      double a = eval_expr(*e.lhs, aggregate, catalog), b = eval_expr(*e.rhs, aggregate, catalog);
      switch (e.op) {
        case '+':
          return a + b;
        case '-':
          return a - b;
        case '*':
          return a * b;
        case '/':
          if (b == 0.0) throw Error(ErrorKind::eval, "division by zero");
          return a / b;
      }
      throw Error(ErrorKind::eval, std::string("unknown operator ") + e.op);
    }
  }
  throw Error(ErrorKind::eval, "bad expression");
}

/// Stores 1 / out-degree of every source of the default relation.
inline void derive_inverse_degree(Catalog& catalog) {
  if (!catalog.default_relation()) throw Error(ErrorKind::unknown_relation, "InvDeg needs a default relation");
  const RelationEntry& edges = catalog.resolve(*catalog.default_relation(), 2);
  EncodedRelation out;
  out.arity = 1;
  for (std::size_t r = 0; r < edges.data.rows;) {
    std::size_t end = r;
    while (end < edges.data.rows && edges.data.row(end)[0] == edges.data.row(r)[0]) ++end;
    Id src = edges.data.row(r)[0];
    out.add(std::span<const Id>(&src, 1), 1.0 / static_cast<double>(end - r));
    r = end;
  }
  catalog.put(derived_inverse_degree, out, ValueType::float_);
}

/// Calls f(suffix, annotation) for every tuple of `trie` starting with `prefix`.
template <class F>
void for_each_with_prefix(const Trie& trie, std::span<const Id> prefix, F&& f) {
  const std::size_t depth = trie.depth(), p = prefix.size();
  if (depth == 0) {
    if (trie.scalar()) f(std::span<const Id>{}, *trie.scalar());
    return;
  }
  if (p == depth) {
    auto idx = trie.locate(prefix.first(p - 1));
    if (!idx) return;
    const SetView& s = trie.set(p - 1, *idx);
    auto pos = s.position(prefix.back());
    if (pos) f(std::span<const Id>{}, trie.annotated() ? s.assoc_at(*pos, prefix.back()) : 1.0);
    return;
  }
  std::optional<std::uint64_t> start = p == 0 ? std::optional<std::uint64_t>(0) : trie.locate(prefix);
  if (!start) return;
  std::vector<Id> suffix(depth - p);
  std::function<void(std::size_t, std::uint64_t)> walk = [&](std::size_t level, std::uint64_t index) {
    const SetView& s = trie.set(level, index);
    std::uint32_t pos = 0;
    s.for_each([&](Id v) {
      suffix[level - p] = v;
      if (level + 1 == depth) f(std::span<const Id>(suffix), trie.annotated() ? s.assoc_at(pos, v) : 1.0);
      else walk(level + 1, trie.child_index(level, index, pos));
      ++pos;
    });
  };
  walk(p, *start);
}

class RuleEvaluator {
 public:
  RuleEvaluator(const RuleIR& rule, Catalog& catalog, const ExecOptions& options)
      : rule_(rule), catalog_(catalog), options_(options), plan_(plan_rule(rule, options.plan)) {
    real_ = Semiring::for_rule(rule);
    join_ = plan_.two_phase ? real_.collapsed() : real_;
  }

  const Plan& plan() const { return plan_; }

  /// Evaluates the rule body and returns the head relation (not stored).
  EncodedRelation evaluate(RuleMetrics& metrics) {
    for (const auto& atom : rule_.atoms)
      if (atom.relation == derived_inverse_degree && atom.intensional && !catalog_.contains(atom.relation))
        derive_inverse_degree(catalog_);

    const std::size_t n = plan_.nodes.size();
    std::vector<NodeResult> results(n);
    metrics.nodes.assign(n, NodeMetrics{});
    for (int v : plan_.post_order()) {
      const PlanNode& node = plan_.nodes[v];
      NodeMetrics& nm = metrics.nodes[v];
      nm.node = v;
      nm.dedup_of = node.dedup_of;
      results[v].vars = node.keep;
      if (node.dedup_of >= 0) {
        results[v].rel = reuse(results[node.dedup_of], node);
      } else {
        JoinSpec spec = node_spec(v, results);
        JoinOutput out = generic_join(spec, options_.threads);
        nm.evaluated = true;
        nm.iterations = out.iterations;
        metrics.iterations += out.iterations;
        metrics.intersections.merge(out.intersections);
        ++metrics.node_evaluations;
        results[v].rel = project(out, spec, node);
      }
      nm.result_tuples = results[v].rel.rows;
    }
    metrics.fhw = plan_.fhw;
    metrics.plan_nodes = n;
    return finish(assemble(results));
  }

 private:
  /// Rows of `src` with columns mapped into this node's variables.
  EncodedRelation reuse(const NodeResult& src, const PlanNode& node) const {
    EncodedRelation out;
    out.arity = node.keep.size();
    std::vector<Id> keys;
    std::vector<Id> row(out.arity);
    for (std::size_t r = 0; r < src.rel.rows; ++r) {
      auto in = src.rel.row(r);
      for (std::size_t k = 0; k < out.arity; ++k) row[k] = in[node.dedup_columns[k]];
      keys.insert(keys.end(), row.begin(), row.end());
    }
    return combine_rows(keys, src.rel.annotations, out.arity, join_);
  }

  /// Output rows of a node projected onto its kept variables.
  EncodedRelation project(const JoinOutput& out, const JoinSpec& spec, const PlanNode& node) const {
    std::vector<std::size_t> cols;
    for (int v : node.keep)
      cols.push_back(static_cast<std::size_t>(std::find(spec.order.begin(), spec.order.end(), v) - spec.order.begin()));
    std::vector<Id> keys;
    keys.reserve(out.rows() * cols.size());
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c : cols) keys.push_back(out.keys[r * out.arity + c]);
    return combine_rows(keys, out.values, cols.size(), join_);
  }

  Participant atom_participant(int a, const std::vector<int>& order, bool annotate) const {
    const AtomIR& atom = rule_.atoms[a];
    Participant p;
    std::vector<int> vars = atom.variables();
    auto rank = [&](int v) { return std::find(order.begin(), order.end(), v) - order.begin(); };
    std::sort(vars.begin(), vars.end(), [&](int x, int y) { return rank(x) < rank(y); });
    p.vars = vars;
    p.use_annotation = annotate && atom.annotated && join_.reads_atoms;
    const RelationEntry* entry = catalog_.find(atom.relation);
    if (atom.empty_selection || !entry || entry->data.rows == 0) {
      p.empty = true;
      return p;
    }
    std::vector<Id> prefix;
    std::vector<std::uint32_t> columns;
    for (std::size_t k = 0; k < atom.terms.size(); ++k)
      if (atom.terms[k] < 0) {
        columns.push_back(static_cast<std::uint32_t>(k));
        prefix.push_back(atom.constants[k]);
      }
    if (!atom.has_repeated_variable()) {
      for (int v : vars)
        columns.push_back(static_cast<std::uint32_t>(std::find(atom.terms.begin(), atom.terms.end(), v) - atom.terms.begin()));
      p.trie = catalog_.trie(*entry, columns);
      if (!prefix.empty()) {
        auto idx = p.trie->locate(prefix);
        if (!idx) {
          p.empty = true;
          return p;
        }
        p.base_level = prefix.size();
        p.base_set = *idx;
      }
      return p;
    }
    // Repeated variables: keep rows whose repeated columns agree, then index the projection.
    std::string key = "eq|" + atom.relation + "|";
    for (std::size_t k = 0; k < atom.terms.size(); ++k)
      key += (atom.terms[k] < 0 ? "c" + std::to_string(atom.constants[k]) : "v" + std::to_string(atom.terms[k])) + ",";
    key += "|";
    for (int v : vars) key += std::to_string(v) + ",";
    p.trie = catalog_.derived_trie(key, [&] {
      EncodedRelation rel;
      rel.arity = vars.size();
      std::vector<Id> row(vars.size());
      for (std::size_t r = 0; r < entry->data.rows; ++r) {
        auto in = entry->data.row(r);
        bool ok = true;
        std::map<int, Id> bound;
        for (std::size_t k = 0; k < atom.terms.size() && ok; ++k) {
          if (atom.terms[k] < 0) ok = in[k] == atom.constants[k];
          else if (auto [it, inserted] = bound.emplace(atom.terms[k], in[k]); !inserted) ok = it->second == in[k];
        }
        if (!ok) continue;
        for (std::size_t i = 0; i < vars.size(); ++i) row[i] = bound[vars[i]];
        if (entry->data.annotated()) rel.add(row, entry->data.annotations[r]); else rel.add(row);
      }
      std::vector<std::uint32_t> natural(vars.size());
      std::iota(natural.begin(), natural.end(), 0u);
      return build_trie(rel, natural, catalog_.policy());
    });
    if (p.trie->tuple_count() == 0) p.empty = true;
    return p;
  }

  /// Variable-free atom: a membership test, possibly carrying an annotation.
  Participant guard_participant(int a) const {
    const AtomIR& atom = rule_.atoms[a];
    Participant p;
    p.use_annotation = atom.annotated && join_.reads_atoms;
    const RelationEntry* entry = catalog_.find(atom.relation);
    if (atom.empty_selection || !entry || entry->data.rows == 0) {
      p.empty = true;
      return p;
    }
    if (atom.arity() == 0) {
      p.factor = entry->data.annotated() ? entry->data.annotations[0] : 1.0;
      return p;
    }
    std::vector<std::uint32_t> natural(atom.arity());
    std::iota(natural.begin(), natural.end(), 0u);
    auto trie = catalog_.trie(*entry, natural);
    p.empty = true;
    for_each_with_prefix(*trie, atom.constants, [&](std::span<const Id>, double ann) {
      p.empty = false;
      p.factor = ann;
    });
    return p;
  }

  Participant message_participant(const NodeResult& child, const std::vector<int>& vars, bool annotate) const {
    Participant p;
    p.vars = vars;
    p.use_annotation = annotate;
    if (child.rel.rows == 0) {
      p.empty = true;
      return p;
    }
    if (vars.empty()) {
      p.factor = child.rel.annotations[0];
      return p;
    }
    if (vars.size() == child.vars.size()) {
      std::vector<std::uint32_t> columns;
      for (int v : vars) columns.push_back(static_cast<std::uint32_t>(child.column(v)));
      p.trie = child.trie(columns, catalog_.policy());
      return p;
    }
    // Semijoin filter on a subset of the child's columns.
    EncodedRelation proj;
    proj.arity = vars.size();
    std::vector<Id> row(vars.size());
    for (std::size_t r = 0; r < child.rel.rows; ++r) {
      for (std::size_t k = 0; k < vars.size(); ++k) row[k] = child.rel.row(r)[child.column(vars[k])];
      proj.add(row);
    }
    std::vector<std::uint32_t> natural(vars.size());
    std::iota(natural.begin(), natural.end(), 0u);
    p.trie = std::make_shared<const Trie>(build_trie(proj, natural, catalog_.policy()));
    return p;
  }

  JoinSpec node_spec(int v, const std::vector<NodeResult>& results) const {
    const PlanNode& node = plan_.nodes[v];
    JoinSpec spec;
    spec.order = node.chi;
    spec.semiring = join_;
    for (int a : node.lambda) spec.participants.push_back(atom_participant(a, spec.order, true));
    for (int a : node.filters) spec.participants.push_back(atom_participant(a, spec.order, false));
    if (v == 0)
      for (int a : plan_.guards) spec.participants.push_back(guard_participant(a));
    for (int c : node.children) {
      const PlanNode& child = plan_.nodes[c];
      std::vector<int> shared;
      for (int x : child.keep)
        if (std::find(node.chi.begin(), node.chi.end(), x) != node.chi.end()) shared.push_back(x);
      spec.participants.push_back(message_participant(results[c], shared, !child.expanding));
    }
    std::size_t split = 0;
    for (std::size_t i = 0; i < spec.order.size(); ++i)
      if (std::find(node.keep.begin(), node.keep.end(), spec.order[i]) != node.keep.end()) split = i + 1;
    spec.split = split;
    return spec;
  }

  /// Rows over plan.output: the root result, extended top-down through
  /// expanding nodes when output variables live below the root.
  EncodedRelation assemble(const std::vector<NodeResult>& results) const {
    const auto& out_vars = plan_.output;
    std::vector<Id> keys;
    std::vector<double> values;
    std::vector<Id> val(rule_.variables.size(), 0);
    std::vector<int> expanding;
    for (std::size_t v = 0; v < plan_.nodes.size(); ++v)
      if (plan_.nodes[v].expanding) expanding.push_back(static_cast<int>(v));

    std::function<void(std::size_t, double)> expand = [&](std::size_t j, double value) {
      if (j == expanding.size()) {
        for (int x : out_vars) keys.push_back(val[x]);
        values.push_back(value);
        return;
      }
      const int u = expanding[j];
      const PlanNode& node = plan_.nodes[u];
      const NodeResult& res = results[u];
      const auto& parent_chi = plan_.nodes[node.parent].chi;
      std::vector<int> lead, rest;
      for (int x : node.keep)
        (std::find(parent_chi.begin(), parent_chi.end(), x) != parent_chi.end() ? lead : rest).push_back(x);
      std::vector<std::uint32_t> columns;
      std::vector<Id> prefix;
      for (int x : lead) {
        columns.push_back(static_cast<std::uint32_t>(res.column(x)));
        prefix.push_back(val[x]);
      }
      for (int x : rest) columns.push_back(static_cast<std::uint32_t>(res.column(x)));
      auto trie = res.trie(columns, catalog_.policy());
      for_each_with_prefix(*trie, prefix, [&](std::span<const Id> suffix, double ann) {
        for (std::size_t k = 0; k < rest.size(); ++k) val[rest[k]] = suffix[k];
        expand(j + 1, join_.times(value, ann));
      });
    };

    const NodeResult& root = results[0];
    for (std::size_t r = 0; r < root.rel.rows; ++r) {
      auto row = root.rel.row(r);
      for (std::size_t k = 0; k < root.vars.size(); ++k) val[root.vars[k]] = row[k];
      expand(0, root.rel.annotations[r]);
    }
    return combine_rows(keys, values, out_vars.size(), join_);
  }

  /// Folds the aggregate per head key and applies the annotation expression.
  EncodedRelation finish(const EncodedRelation& rows) const {
    const std::size_t h = rule_.head.size();
    std::vector<Id> keys;
    std::vector<double> values;
    for (std::size_t r = 0; r < rows.rows; ++r) {
      auto row = rows.row(r);
      keys.insert(keys.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(h));
      values.push_back(rows.annotations[r]);
    }
    EncodedRelation grouped = combine_rows(keys, values, h, real_);
    if (h == 0 && grouped.rows == 0 && rule_.aggregate &&
        (*rule_.aggregate == AggOp::sum || *rule_.aggregate == AggOp::count))
      grouped.add(std::span<const Id>{}, 0.0);
    EncodedRelation out;
    out.arity = h;
    for (std::size_t r = 0; r < grouped.rows; ++r) {
      if (!rule_.annotated_head()) {
        out.add(grouped.row(r));
        continue;
      }
      std::optional<double> agg;
      if (rule_.aggregate) agg = grouped.annotations[r];
      double value = eval_expr(*rule_.expr, agg, catalog_);
      if (is_integral(rule_.head_type)) value = std::nearbyint(value);
      out.add(grouped.row(r), value);
    }
    return out;
  }

  const RuleIR& rule_;
  Catalog& catalog_;
  const ExecOptions& options_;
  Plan plan_;
  Semiring real_;
  Semiring join_;
};

inline bool same_relation(const RelationEntry* entry, const EncodedRelation& rel) {
  if (!entry) return rel.rows == 0;
  return entry->data.rows == rel.rows && entry->data.data == rel.data && entry->data.annotations == rel.annotations;
}

/// Union of the stored head and `fresh`; shared keys keep the better value
/// under `sr` (the old one for set semantics).
inline EncodedRelation merge_into(const RelationEntry* entry, const EncodedRelation& fresh, const Semiring& sr) {
  std::vector<Id> keys;
  std::vector<double> values;
  const bool annotated = fresh.annotated() || (entry && entry->data.annotated());
  if (entry)
    for (std::size_t r = 0; r < entry->data.rows; ++r) {
      auto row = entry->data.row(r);
      keys.insert(keys.end(), row.begin(), row.end());
      values.push_back(entry->data.annotated() ? entry->data.annotations[r] : 1.0);
    }
  for (std::size_t r = 0; r < fresh.rows; ++r) {
    auto row = fresh.row(r);
    keys.insert(keys.end(), row.begin(), row.end());
    values.push_back(fresh.annotated() ? fresh.annotations[r] : 1.0);
  }
  EncodedRelation out = combine_rows(keys, values, fresh.arity, sr);
  if (!annotated) out.annotations.clear();
  return out;
}

inline std::string delta_name(const std::string& head) { return head + "\x1f" "delta"; }

class ProgramRunner {
 public:
  ProgramRunner(Catalog& catalog, const ExecOptions& options) : catalog_(catalog), options_(options) {}

  ExecResult run(const std::vector<RuleIR>& rules) {
    auto start = std::chrono::steady_clock::now();
    ExecResult result;
    for (const RuleIR& rule : rules) {
      auto t0 = std::chrono::steady_clock::now();
      RuleMetrics m;
      m.head = rule.head_name();
      run_rule(rule, m);
      if (const RelationEntry* e = catalog_.find(rule.head_name())) m.output_tuples = e->data.rows;
      m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      result.metrics.iterations += m.iterations;
      result.metrics.node_evaluations += m.node_evaluations;
      result.metrics.intersections.merge(m.intersections);
      result.metrics.rules.push_back(std::move(m));
      result.relation = rule.head_name();
      result.type = rule.head_type;
    }
    result.metrics.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return result;
  }

  void run_rule(const RuleIR& rule, RuleMetrics& m) {
    switch (rule.recursion.kind) {
      case Recursion::Kind::none: {
        RuleEvaluator eval(rule, catalog_, options_);
        catalog_.put(rule.head_name(), eval.evaluate(m), rule.head_type);
        m.rounds = 1;
        return;
      }
      case Recursion::Kind::naive:
        m.mode = "naive";
        run_naive(rule, rule.recursion.iterations, m);
        return;
      case Recursion::Kind::fixpoint:
        if (rule.seminaive_eligible && !options_.force_naive) {
          m.mode = "seminaive";
          run_seminaive(rule, m);
        } else {
          m.mode = "naive-fixpoint";
          run_naive(rule, std::nullopt, m);
        }
        return;
    }
  }

  /// Applies the rule `rounds` times (to convergence when unset). SUM and
  /// COUNT heads are replaced each round; other heads accumulate.
  void run_naive(const RuleIR& rule, std::optional<std::size_t> rounds, RuleMetrics& m) {
    RuleEvaluator eval(rule, catalog_, options_);
    const Semiring sr = Semiring::for_rule(rule);
    const bool replace = rule.aggregate && !sr.idempotent();
    const std::size_t limit = rounds.value_or(options_.max_rounds);
    for (std::size_t i = 0; i < limit; ++i) {
      EncodedRelation fresh = eval.evaluate(m);
      const RelationEntry* current = catalog_.find(rule.head_name());
      EncodedRelation next = replace ? fresh : merge_into(current, fresh, sr);
      ++m.rounds;
      if (!rounds && same_relation(current, next)) return;
      catalog_.put(rule.head_name(), next, rule.head_type);
    }
    if (!rounds) throw Error(ErrorKind::eval, "rule '" + rule.head_name() + "' did not converge within " +
                                                  std::to_string(limit) + " rounds");
  }

  /// Frontier evaluation for MIN/MAX: each round reads only the keys that
  /// improved in the previous round, once per occurrence of the head.
  void run_seminaive(const RuleIR& rule, RuleMetrics& m) {
    if (!rule.aggregate || (*rule.aggregate != AggOp::min && *rule.aggregate != AggOp::max))
      throw Error(ErrorKind::non_monotone_aggregate,
                  "seminaive evaluation of '" + rule.head_name() + "' needs a MIN or MAX aggregate");
    const Semiring sr = Semiring::for_rule(rule);
    const std::string delta = delta_name(rule.head_name());
    std::vector<RuleIR> variants;
    for (std::size_t k = 0; k < rule.atoms.size(); ++k) {
      if (rule.atoms[k].relation != rule.head_name()) continue;
      RuleIR v = rule;
      v.atoms[k].relation = delta;
      variants.push_back(std::move(v));
    }
    std::vector<std::unique_ptr<RuleEvaluator>> evals;
    for (const auto& v : variants) evals.push_back(std::make_unique<RuleEvaluator>(v, catalog_, options_));

    EncodedRelation frontier;
    if (const RelationEntry* e = catalog_.find(rule.head_name())) frontier = e->data;
    else frontier.arity = rule.head.size();
    for (std::size_t round = 0; frontier.rows > 0; ++round) {
      if (round >= options_.max_rounds)
        throw Error(ErrorKind::eval, "rule '" + rule.head_name() + "' did not converge");
      catalog_.put(delta, frontier, rule.head_type);
      EncodedRelation candidates;
      candidates.arity = rule.head.size();
      for (auto& e : evals) candidates = merge_into_relation(candidates, e->evaluate(m), sr);
      ++m.rounds;
      const RelationEntry* current = catalog_.find(rule.head_name());
      EncodedRelation improved;
      improved.arity = candidates.arity;
      for (std::size_t r = 0; r < candidates.rows; ++r) {
        auto row = candidates.row(r);
        double v = candidates.annotations[r];
        std::optional<double> old;
        if (current && current->data.rows) {
          auto trie = catalog_.trie(*current, natural(candidates.arity));
          for_each_with_prefix(*trie, row, [&](std::span<const Id>, double ann) { old = ann; });
        }
        if (!old || sr.plus(v, *old) != *old) improved.add(row, v);
      }
      if (improved.rows > 0) catalog_.put(rule.head_name(), merge_into(current, improved, sr), rule.head_type);
      frontier = std::move(improved);
    }
    catalog_.remove(delta);
  }

 private:
  static std::vector<std::uint32_t> natural(std::size_t n) {
    std::vector<std::uint32_t> v(n);
    std::iota(v.begin(), v.end(), 0u);
    return v;
  }

  static EncodedRelation merge_into_relation(const EncodedRelation& a, const EncodedRelation& b, const Semiring& sr) {
    std::vector<Id> keys = a.data;
    keys.insert(keys.end(), b.data.begin(), b.data.end());
    std::vector<double> values = a.annotations;
    values.insert(values.end(), b.annotations.begin(), b.annotations.end());
    return combine_rows(keys, values, a.arity, sr);
  }

  Catalog& catalog_;
  const ExecOptions& options_;
};

}  // namespace detail

/// Runs validated rules in order, storing every head in the catalog.
inline ExecResult execute(const std::vector<RuleIR>& rules, Catalog& catalog, const ExecOptions& options = {}) {
  return detail::ProgramRunner(catalog, options).run(rules);
}

inline ExecResult execute(const std::string& program, Catalog& catalog, const ExecOptions& options = {}) {
  return execute(validate(parse_program(program), catalog), catalog, options);
}

/// Seminaive fixpoint of one validated recursive rule over the catalog.
inline RuleMetrics run_seminaive(const RuleIR& rule, Catalog& catalog, const ExecOptions& options = {}) {
  RuleMetrics m;
  m.head = rule.head_name();
  m.mode = "seminaive";
  detail::ProgramRunner(catalog, options).run_seminaive(rule, m);
  return m;
}

/// `rounds` naive applications of one validated recursive rule.
inline RuleMetrics run_naive(const RuleIR& rule, Catalog& catalog, std::size_t rounds, const ExecOptions& options = {}) {
  RuleMetrics m;
  m.head = rule.head_name();
  m.mode = "naive";
  detail::ProgramRunner(catalog, options).run_naive(rule, rounds, m);
  return m;
}

}  // namespace hyperjoin
