#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "hyperjoin/frontend/parser.hpp"
#include "hyperjoin/frontend/validate.hpp"

namespace hyperjoin::testing {

/// Head key -> annotation (1 for unannotated heads).
using Answer = std::map<std::vector<Id>, double>;

inline Answer answer_of(const EncodedRelation& rel) {
  Answer out;
  for (std::size_t r = 0; r < rel.rows; ++r) {
    auto row = rel.row(r);
    out[{row.begin(), row.end()}] = rel.annotated() ? rel.annotations[r] : 1.0;
  }
  return out;
}

inline Answer answer_of(const Catalog& catalog, const std::string& name) {
  const RelationEntry* e = catalog.find(name);
  return e ? answer_of(e->data) : Answer{};
}

/// Straightforward datalog evaluator: enumerates every body binding by
/// backtracking over atoms with hash indexes on the bound columns, then
/// groups the bindings per head key. Shares only the parser and validator
/// with the engine.
class DatalogOracle {
 public:
  explicit DatalogOracle(const Catalog& catalog) : catalog_(catalog) {}

  /// Evaluates every rule of `program` in order; returns the last head.
  Answer run(const std::string& program) {
    auto rules = validate(parse_program(program), catalog_);
    std::string last;
    for (const auto& rule : rules) {
      run_rule(rule);
      last = rule.head_name();
    }
    return store_[last];
  }

  const Answer& relation(const std::string& name) { return store_[name]; }

 private:
  struct Table {
    std::vector<std::vector<Id>> rows;
    std::vector<double> values;
    bool annotated = false;
  };

  Table table(const AtomIR& atom) {
    Table t;
    if (atom.intensional || store_.count(atom.relation)) {
      if (atom.relation == derived_inverse_degree && !store_.count(atom.relation)) store_[atom.relation] = inverse_degree();
      for (const auto& [k, v] : store_[atom.relation]) {
        t.rows.push_back(k);
        t.values.push_back(v);
      }
      t.annotated = intensional_annotated_.count(atom.relation) ? intensional_annotated_[atom.relation] : true;
      return t;
    }
    const RelationEntry* e = catalog_.find(atom.relation);
    if (!e) return t;
    t.annotated = e->data.annotated();
    for (std::size_t r = 0; r < e->data.rows; ++r) {
      auto row = e->data.row(r);
      t.rows.emplace_back(row.begin(), row.end());
      t.values.push_back(t.annotated ? e->data.annotations[r] : 1.0);
    }
    return t;
  }

  Answer inverse_degree() {
    std::map<Id, std::size_t> deg;
    const RelationEntry& edges = catalog_.resolve(*catalog_.default_relation(), 2);
    for (std::size_t r = 0; r < edges.data.rows; ++r) ++deg[edges.data.row(r)[0]];
    Answer out;
    for (auto [v, d] : deg) out[{v}] = 1.0 / static_cast<double>(d);
    intensional_annotated_[derived_inverse_degree] = true;
    return out;
  }

  /// Every satisfying assignment with the product of its annotated atoms.
  std::vector<std::pair<std::vector<Id>, double>> bindings(const RuleIR& rule) {
    const std::size_t n = rule.atoms.size();
    std::vector<Table> tables;
    for (const auto& a : rule.atoms) tables.push_back(table(a));
    const bool min_agg = rule.aggregate && *rule.aggregate == AggOp::min;
    const bool count_agg = rule.aggregate && *rule.aggregate == AggOp::count;

    // Greedy atom order: most already-bound variables first.
    std::vector<int> order;
    std::vector<bool> used(n, false), bound(rule.variables.size(), false);
    for (std::size_t step = 0; step < n; ++step) {
      int best = -1, best_score = -1;
      for (std::size_t a = 0; a < n; ++a) {
        if (used[a]) continue;
        int score = 0;
        for (int t : rule.atoms[a].terms) score += t < 0 || bound[t] ? 1 : 0;
        if (score > best_score) best = static_cast<int>(a), best_score = score;
      }
      used[best] = true;
      order.push_back(best);
      for (int t : rule.atoms[best].terms)
        if (t >= 0) bound[t] = true;
    }

    // Index each atom on the columns bound when it is reached.
    std::vector<std::vector<std::size_t>> key_cols(n);
    std::vector<std::map<std::vector<Id>, std::vector<std::size_t>>> index(n);
    std::fill(bound.begin(), bound.end(), false);
    for (int a : order) {
      const AtomIR& atom = rule.atoms[a];
      for (std::size_t k = 0; k < atom.terms.size(); ++k)
        if (atom.terms[k] < 0 || bound[atom.terms[k]]) key_cols[a].push_back(k);
      for (std::size_t r = 0; r < tables[a].rows.size(); ++r) {
        std::vector<Id> key;
        for (auto k : key_cols[a]) key.push_back(tables[a].rows[r][k]);
        index[a][key].push_back(r);
      }
      for (int t : atom.terms)
        if (t >= 0) bound[t] = true;
    }

    std::vector<std::pair<std::vector<Id>, double>> out;
    std::vector<Id> val(rule.variables.size());
    std::vector<bool> set(rule.variables.size(), false);
    std::function<void(std::size_t, double)> rec = [&](std::size_t i, double value) {
      if (i == n) {
        out.emplace_back(val, value);
        return;
      }
      const int a = order[i];
      const AtomIR& atom = rule.atoms[a];
      if (atom.empty_selection) return;
      std::vector<Id> key;
      for (auto k : key_cols[a]) key.push_back(atom.terms[k] < 0 ? atom.constants[k] : val[atom.terms[k]]);
      auto it = index[a].find(key);
      if (it == index[a].end()) return;
      for (std::size_t r : it->second) {
        const auto& row = tables[a].rows[r];
        std::vector<int> newly;
        bool ok = true;
        for (std::size_t k = 0; k < row.size() && ok; ++k) {
          int t = atom.terms[k];
          if (t < 0) continue;
          if (set[t]) ok = val[t] == row[k];
          else {
            set[t] = true;
            val[t] = row[k];
            newly.push_back(t);
          }
        }
        if (ok) {
          double next = value;
          if (atom.annotated && tables[a].annotated && !count_agg)
            next = min_agg ? next + tables[a].values[r] : next * tables[a].values[r];
          rec(i + 1, next);
        }
        for (int t : newly) set[t] = false;
      }
    };
    rec(0, min_agg ? 0.0 : 1.0);
    return out;
  }

  double scalar(const std::string& name) {
    if (store_.count(name)) {
      const Answer& a = store_[name];
      if (a.empty()) throw Error(ErrorKind::eval, "empty scalar");
      return a.begin()->second;
    }
    const RelationEntry* e = catalog_.find(name);
    if (!e || e->data.rows == 0) throw Error(ErrorKind::eval, "empty scalar");
    return e->data.annotated() ? e->data.annotations[0] : 1.0;
  }

  double eval(const Expr& e, double agg) {
    switch (e.kind) {
      case Expr::Kind::number: return e.number;
      case Expr::Kind::ref: return scalar(e.text);
      case Expr::Kind::aggregate: return agg;
      case Expr::Kind::negate: return -eval(*e.lhs, agg);
      case Expr::Kind::binary: {
        double a = eval(*e.lhs, agg), b = eval(*e.rhs, agg);
        if (e.op == '+') return a + b;
        if (e.op == '-') return a - b;
        if (e.op == '*') return a * b;
        return a / b;
      }
    }
    return 0.0;
  }

  /// One application of the rule against the current store.
  Answer apply(const RuleIR& rule) {
    auto all = bindings(rule);
    auto head_of = [&](const std::vector<Id>& val) {
      std::vector<Id> key;
      for (int v : rule.head) key.push_back(val[v]);
      return key;
    };
    std::map<std::vector<Id>, double> folded;
    std::set<std::vector<Id>> keys;
    if (!rule.aggregate) {
      for (const auto& [val, value] : all) keys.insert(head_of(val));
    } else if (rule.aggregate_var < 0) {
      for (const auto& [val, value] : all) folded[head_of(val)] += 1.0;
    } else {
      // Distinct (head, v) pairs first; the other variables are existential.
      std::map<std::vector<Id>, double> pairs;
      for (const auto& [val, value] : all) {
        auto key = head_of(val);
        key.push_back(val[rule.aggregate_var]);
        pairs.emplace(key, value);
      }
      for (const auto& [key, value] : pairs) {
        std::vector<Id> head(key.begin(), key.end() - 1);
        auto [it, inserted] = folded.emplace(head, *rule.aggregate == AggOp::count ? 1.0 : value);
        if (inserted) continue;
        switch (*rule.aggregate) {
          case AggOp::sum: it->second += value; break;
          case AggOp::count: it->second += 1.0; break;
          case AggOp::min: it->second = std::min(it->second, value); break;
          case AggOp::max: it->second = std::max(it->second, value); break;
        }
      }
    }
    if (rule.head.empty() && folded.empty() && rule.aggregate &&
        (*rule.aggregate == AggOp::sum || *rule.aggregate == AggOp::count))
      folded[{}] = 0.0;
    Answer out;
    if (!rule.aggregate) {
      for (const auto& k : keys) out[k] = rule.annotated_head() ? eval(*rule.expr, 0.0) : 1.0;
    } else {
      for (const auto& [k, agg] : folded) {
        double v = rule.annotated_head() ? eval(*rule.expr, agg) : 1.0;
        if (is_integral(rule.head_type)) v = std::nearbyint(v);
        out[k] = v;
      }
    }
    if (!rule.aggregate && is_integral(rule.head_type))
      for (auto& [k, v] : out) v = std::nearbyint(v);
    return out;
  }

  void run_rule(const RuleIR& rule) {
    const std::string& head = rule.head_name();
    intensional_annotated_[head] = rule.annotated_head();
    if (rule.recursion.kind == Recursion::Kind::none) {
      store_[head] = apply(rule);
      return;
    }
    const bool replace =
        rule.aggregate && (*rule.aggregate == AggOp::sum || *rule.aggregate == AggOp::count);
    const bool fixpoint = rule.recursion.kind == Recursion::Kind::fixpoint;
    const std::size_t rounds = fixpoint ? 100000 : rule.recursion.iterations;
    for (std::size_t i = 0; i < rounds; ++i) {
      Answer fresh = apply(rule);
      Answer next = replace ? fresh : store_[head];
      if (!replace)
        for (const auto& [k, v] : fresh) {
          auto [it, inserted] = next.emplace(k, v);
          if (inserted || !rule.aggregate) continue;
          if (*rule.aggregate == AggOp::min) it->second = std::min(it->second, v);
          if (*rule.aggregate == AggOp::max) it->second = std::max(it->second, v);
        }
      if (fixpoint && next == store_[head]) return;
      store_[head] = std::move(next);
    }
  }

  const Catalog& catalog_;
  std::map<std::string, Answer> store_;
  std::map<std::string, bool> intensional_annotated_;
};

/// Breadth-first distances from `source` over directed `edges`, counting the
/// source as 1.
inline std::map<Id, double> bfs_plus_one(const std::vector<Edge>& edges, Id source) {
  std::map<Id, std::vector<Id>> adj;
  for (auto [a, b] : edges) adj[a].push_back(b);
  std::map<Id, double> dist{{source, 1.0}};
  std::queue<Id> q;
  q.push(source);
  while (!q.empty()) {
    Id u = q.front();
    q.pop();
    for (Id v : adj[u])
      if (!dist.count(v)) {
        dist[v] = dist[u] + 1.0;
        q.push(v);
      }
  }
  return dist;
}

/// The benchmark PageRank program evaluated with dense vectors: rank starts at
/// 1/N on every source (N = distinct sources), then each of `iterations`
/// rounds sets PR(x) = 0.15 + 0.85 * sum over edges x->z of PR(z) / outdeg(z),
/// for every x with an out-edge whose targets all have ranks.
inline std::map<Id, double> dense_pagerank(const std::vector<Edge>& edges, Id n, int iterations) {
  std::vector<double> outdeg(n, 0.0);
  std::vector<std::vector<Id>> out(n);
  for (auto [a, b] : edges) {
    outdeg[a] += 1.0;
    out[a].push_back(b);
  }
  double sources = 0;
  for (Id v = 0; v < n; ++v) sources += outdeg[v] > 0 ? 1.0 : 0.0;
  std::vector<double> pr(n, 0.0);
  std::vector<bool> has(n, false);
  for (Id v = 0; v < n; ++v)
    if (outdeg[v] > 0) {
      pr[v] = 1.0 / sources;
      has[v] = true;
    }
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> next(n, 0.0);
    std::vector<bool> next_has(n, false);
    for (Id x = 0; x < n; ++x) {
      double s = 0;
      bool any = false;
      for (Id z : out[x])
        if (has[z] && outdeg[z] > 0) {
          s += pr[z] / outdeg[z];
          any = true;
        }
      if (any) {
        next[x] = 0.15 + 0.85 * s;
        next_has[x] = true;
      }
    }
    pr = std::move(next);
    has = std::move(next_has);
  }
  std::map<Id, double> result;
  for (Id v = 0; v < n; ++v)
    if (has[v]) result[v] = pr[v];
  return result;
}

}  // namespace hyperjoin::testing
