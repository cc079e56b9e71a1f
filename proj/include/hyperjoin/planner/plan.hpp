#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyperjoin/planner/ghd.hpp"

namespace hyperjoin {

struct PlanOptions {
  /// Search decompositions; false forces the single-node plan.
  bool ghd = true;
  /// Plan selections per the pushdown procedure; false models the unpushed baseline.
  bool pushdown = true;
  bool dedup = true;
  std::size_t edge_cap = default_edge_cap;
};

struct PlanNode {
  /// Atoms joined here, by body index.
  std::vector<int> lambda;
  /// Selection atoms from elsewhere in the tree repeated here as Boolean filters.
  std::vector<int> filters;
  /// Variables bound by the node's loop nest, in global attribute order.
  std::vector<int> chi;
  /// Variables of the node's result, in global attribute order.
  std::vector<int> keep;
  Rational width;
  int parent = -1;
  std::vector<int> children;
  int depth = 0;
  /// The result is re-attached in the top-down pass instead of being folded
  /// into the parent, which only uses it as a semijoin filter.
  bool expanding = false;
  /// Earlier node (in bottom-up order) whose result this node reuses.
  int dedup_of = -1;
  /// Column of dedup_of's result feeding each column of this node's result.
  std::vector<int> dedup_columns;
};

struct Plan {
  Hypergraph hypergraph;
  std::vector<PlanNode> nodes;
  Rational fhw;
  Rational width_sum;
  int selection_depth = 0;
  int height = 0;
  std::vector<int> attribute_order;
  /// Atoms without variables, checked once before the join.
  std::vector<int> guards;
  /// Variables kept through the join: the head keys, plus the aggregated
  /// variable when other variables must be projected away first.
  std::vector<int> output;
  /// The join runs under set semantics over `output`; the aggregate is folded
  /// over the distinct output tuples afterwards.
  bool two_phase = false;
  bool topdown = false;
  std::size_t candidates = 0;

  /// Bottom-up evaluation order: children before parents.
  std::vector<int> post_order() const {
    std::vector<int> out;
    std::function<void(int)> walk = [&](int v) {
      for (int c : nodes[v].children) walk(c);
      out.push_back(v);
    };
    if (!nodes.empty()) walk(0);
    return out;
  }
};

namespace detail {

struct Scored {
  const Ghd* ghd;
  Rational fhw;
  Rational sum;
  int depth;
  int nodes;
  int height;
  std::vector<std::vector<int>> lambdas;
};

inline int selection_depth(const Hypergraph& h, const Ghd& g) {
  int total = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t e = 0; e < h.edges.size(); ++e)
      if ((g.nodes[i].lambda >> e & 1u) && h.edges[e].selection) total += g.depth(static_cast<int>(i));
  return total;
}

/// Output variables and evaluation mode for the rule's aggregate semantics.
inline void output_variables(const RuleIR& rule, Plan& plan) {
  plan.output = rule.head;
  if (!rule.aggregate || rule.aggregate_var < 0) return;
  std::vector<int> vars;
  for (const auto& a : rule.atoms)
    for (int v : a.variables()) vars.push_back(v);
  for (int v : vars) {
    bool head = std::find(rule.head.begin(), rule.head.end(), v) != rule.head.end();
    if (!head && v != rule.aggregate_var) {
      plan.two_phase = true;
      break;
    }
  }
  if (plan.two_phase) plan.output.push_back(rule.aggregate_var);
}

inline std::vector<int> ordered(VertexMask vars, const std::vector<int>& order) {
  std::vector<int> out;
  for (int v : order)
    if (vars >> v & 1u) out.push_back(v);
  return out;
}

inline VertexMask mask_of(const std::vector<int>& vars) {
  VertexMask m = 0;
  for (int v : vars) m |= VertexMask{1} << v;
  return m;
}

/// Subtree signature with variables renamed by first occurrence. Equal
/// signatures mean equal atoms, selections, projections and subtree shape, so
/// the two subtrees produce the same result up to renaming.
inline std::string node_signature(const RuleIR& rule, const Plan& plan, int root, std::map<int, int>& rename) {
  std::string out;
  auto var = [&](int v) {
    auto [it, inserted] = rename.try_emplace(v, static_cast<int>(rename.size()));
    return "v" + std::to_string(it->second);
  };
  auto atom_text = [&](int a) {
    const AtomIR& atom = rule.atoms[a];
    std::string s = atom.relation + (atom.annotated ? "@" : "") + "(";
    for (std::size_t k = 0; k < atom.terms.size(); ++k) {
      if (atom.terms[k] >= 0) s += var(atom.terms[k]);
      else s += atom.empty_selection ? "c?" : "c" + std::to_string(atom.constants[k]);
      s += ",";
    }
    return s + ")";
  };
  std::function<void(int)> walk = [&](int v) {
    const PlanNode& n = plan.nodes[v];
    out += "{";
    for (int a : n.lambda) out += atom_text(a);
    out += "|f";
    for (int a : n.filters) out += atom_text(a);
    out += "|k";
    std::vector<std::string> keep;
    for (int k : n.keep) keep.push_back(var(k));
    std::sort(keep.begin(), keep.end());
    for (const auto& k : keep) out += k + ",";
    out += n.expanding ? "|x" : "|-";
    for (int c : n.children) walk(c);
    out += "}";
  };
  walk(root);
  return out;
}

}  // namespace detail

/// Selects among candidate GHDs by fhw, then the sum of node widths, then
/// selection depth (deepest when pushing down, shallowest for the unpushed
/// baseline), node count, height and finally the pre-order lambda sequence.
/// When pushing down, nodes holding only selected atoms add nothing to the
/// width sum: constants are assumed selective, so such nodes are cheap.
inline const Ghd& choose_ghd(const std::vector<Ghd>& candidates, const Hypergraph& h, bool pushdown,
                             AgmCache& agm) {
  if (candidates.empty()) throw Error(ErrorKind::infeasible, "no candidate decomposition");
  const bool selections = std::any_of(h.edges.begin(), h.edges.end(), [](const Hyperedge& e) { return e.selection; });
  std::optional<detail::Scored> best;
  auto better = [&](const detail::Scored& a, const detail::Scored& b) {
    if (a.fhw != b.fhw) return a.fhw < b.fhw;
    if (a.sum != b.sum) return a.sum < b.sum;
    if (selections && a.depth != b.depth) return pushdown ? a.depth > b.depth : a.depth < b.depth;
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    if (a.height != b.height) return a.height < b.height;
    return a.lambdas < b.lambdas;
  };
  for (const Ghd& g : candidates) {
    detail::Scored s{&g, Rational(0), Rational(0), detail::selection_depth(h, g), static_cast<int>(g.nodes.size()),
                     g.height(), g.lambda_sequence()};
    for (const auto& n : g.nodes) {
      Rational w = agm(n.lambda, n.chi);
      s.fhw = std::max(s.fhw, w);
      bool selection_only = true;
      for (std::size_t e = 0; e < h.edges.size(); ++e)
        if (n.lambda >> e & 1u) selection_only &= h.edges[e].selection;
      if (!(pushdown && selection_only)) s.sum += w;
    }
    if (!best || better(s, *best)) best = std::move(s);
  }
  return *best->ghd;
}

/// Pre-order walk appending each node's unseen variables; inside a node,
/// variables of selection atoms come first, then first appearance by atom.
inline std::vector<int> attribute_order(const RuleIR& rule, const Plan& plan) {
  std::vector<int> order;
  std::vector<bool> seen(rule.variables.size(), false);
  auto add = [&](int v) {
    if (!seen[v]) {
      seen[v] = true;
      order.push_back(v);
    }
  };
  std::function<void(int)> walk = [&](int v) {
    const PlanNode& n = plan.nodes[v];
    std::vector<int> atoms = n.lambda;
    atoms.insert(atoms.end(), n.filters.begin(), n.filters.end());
    std::sort(atoms.begin(), atoms.end());
    for (int a : atoms)
      if (rule.atoms[a].has_selection())
        for (int x : rule.atoms[a].variables()) add(x);
    std::vector<int> own = n.lambda;
    std::sort(own.begin(), own.end());
    for (int a : own)
      for (int x : rule.atoms[a].variables()) add(x);
    for (int c : n.children) walk(c);
  };
  if (!plan.nodes.empty()) walk(0);
  return order;
}

/// True when some output variable is missing from the root bag, so results
/// must be re-assembled by walking the tree top-down.
inline bool needs_topdown(const Plan& plan) {
  if (plan.nodes.empty()) return false;
  VertexMask root = detail::mask_of(plan.nodes[0].chi);
  return (detail::mask_of(plan.output) & ~root) != 0;
}

/// Links each node to the first earlier node (bottom-up order) with an equal
/// subtree signature and records how its result columns map.
inline void dedup_nodes(const RuleIR& rule, Plan& plan) {
  std::vector<std::pair<std::string, int>> evaluated;
  std::vector<std::map<int, int>> renames(plan.nodes.size());
  for (int v : plan.post_order()) {
    plan.nodes[v].dedup_of = -1;
    plan.nodes[v].dedup_columns.clear();
    std::string sig = detail::node_signature(rule, plan, v, renames[v]);
    auto it = std::find_if(evaluated.begin(), evaluated.end(), [&](const auto& e) { return e.first == sig; });
    if (it == evaluated.end()) {
      evaluated.emplace_back(sig, v);
      continue;
    }
    const int src = it->second;
    std::map<int, int> by_name;
    for (std::size_t k = 0; k < plan.nodes[src].keep.size(); ++k)
      by_name[renames[src].at(plan.nodes[src].keep[k])] = static_cast<int>(k);
    plan.nodes[v].dedup_of = src;
    for (int x : plan.nodes[v].keep) plan.nodes[v].dedup_columns.push_back(by_name.at(renames[v].at(x)));
  }
}

/// Builds the logical plan of a validated rule.
inline Plan plan_rule(const RuleIR& rule, const PlanOptions& options = {}) {
  Plan plan;
  const bool pseudo = !options.pushdown;
  plan.hypergraph = build_hypergraph(rule, pseudo);
  const Hypergraph& h = plan.hypergraph;
  plan.guards = h.guards;
  AgmCache agm(h);

  Ghd chosen;
  if (options.ghd && !h.edges.empty()) {
    auto candidates = enumerate_ghds(h, options.edge_cap);
    plan.candidates = candidates.size();
    chosen = choose_ghd(candidates, h, options.pushdown, agm);
  } else {
    chosen = h.edges.empty() ? Ghd{{GhdNode{}}} : single_node_ghd(h);
    plan.candidates = 1;
  }

  detail::output_variables(rule, plan);
  plan.selection_depth = detail::selection_depth(h, chosen);
  plan.height = chosen.height();
  for (std::size_t i = 0; i < chosen.nodes.size(); ++i) {
    const GhdNode& g = chosen.nodes[i];
    PlanNode n;
    for (std::size_t e = 0; e < h.edges.size(); ++e)
      if (g.lambda >> e & 1u) n.lambda.push_back(h.edges[e].atom);
    n.width = g.lambda ? agm(g.lambda, g.chi) : Rational(0);
    n.parent = g.parent;
    n.children = g.children;
    n.depth = chosen.depth(static_cast<int>(i));
    plan.fhw = std::max(plan.fhw, n.width);
    plan.width_sum += n.width;
    plan.nodes.push_back(std::move(n));
  }

  // Selected atoms repeat as filters wherever another atom covers their variables.
  if (options.pushdown) {
    for (std::size_t e = 0; e < h.edges.size(); ++e) {
      if (!h.edges[e].selection) continue;
      for (std::size_t i = 0; i < chosen.nodes.size(); ++i) {
        const EdgeMask lambda = chosen.nodes[i].lambda;
        if (lambda >> e & 1u) continue;
        for (std::size_t f = 0; f < h.edges.size(); ++f) {
          if ((lambda >> f & 1u) && (h.edges[e].vertices & ~h.edges[f].vertices) == 0) {
            plan.nodes[i].filters.push_back(h.edges[e].atom);
            break;
          }
        }
      }
    }
  }

  plan.attribute_order = attribute_order(rule, plan);
  for (std::size_t i = 0; i < chosen.nodes.size(); ++i)
    plan.nodes[i].chi = detail::ordered(chosen.nodes[i].chi & h.variable_mask(), plan.attribute_order);

  // A child expands top-down when its subtree holds output variables the parent lacks.
  const VertexMask out = detail::mask_of(plan.output);
  std::vector<VertexMask> subtree(plan.nodes.size(), 0);
  for (int v : plan.post_order()) {
    subtree[v] = detail::mask_of(plan.nodes[v].chi);
    for (int c : plan.nodes[v].children) subtree[v] |= subtree[c];
    const int p = plan.nodes[v].parent;
    if (p >= 0) plan.nodes[v].expanding = (subtree[v] & out & ~chosen.nodes[p].chi) != 0;
  }
  for (std::size_t v = 0; v < plan.nodes.size(); ++v) {
    PlanNode& n = plan.nodes[v];
    VertexMask wanted = out;
    if (n.parent >= 0) wanted |= detail::mask_of(plan.nodes[n.parent].chi);
    for (int c : n.children)
      if (plan.nodes[c].expanding) wanted |= detail::mask_of(plan.nodes[c].chi);
    n.keep = detail::ordered(detail::mask_of(n.chi) & wanted, plan.attribute_order);
  }
  plan.topdown = needs_topdown(plan);
  if (options.dedup) dedup_nodes(rule, plan);
  return plan;
}

}  // namespace hyperjoin
