#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperjoin/planner/plan.hpp"

namespace hyperjoin {

namespace detail {

/// Atom labels as written, suffixed with the body position when a name repeats.
inline std::vector<std::string> atom_labels(const RuleIR& rule) {
  std::map<std::string, int> count;
  for (const auto& a : rule.atoms) ++count[a.name];
  std::vector<std::string> out;
  for (std::size_t i = 0; i < rule.atoms.size(); ++i) {
    const std::string& name = rule.atoms[i].name;
    out.push_back(count[name] > 1 ? name + "#" + std::to_string(i) : name);
  }
  return out;
}

inline std::string join_names(const std::vector<int>& ids, const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? "," : "") + names[ids[i]];
  return out;
}

inline std::string term_text(const RuleIR& rule, const AtomIR& atom, std::size_t k) {
  if (atom.terms[k] >= 0) return rule.variables[atom.terms[k]];
  return "'" + rule.rule.body[&atom - rule.atoms.data()].terms[k].text + "'";
}

}  // namespace detail

/// Stable text rendering: one line per node, indented by depth, then the loop
/// nest each evaluated node runs.
inline std::string explain_text(const RuleIR& rule, const Plan& plan) {
  const auto labels = detail::atom_labels(rule);
  const auto& vars = rule.variables;
  std::ostringstream os;
  os << "rule " << rule.head_name() << "\n";
  os << "fhw " << plan.fhw << "\n";
  os << "nodes " << plan.nodes.size() << "\n";
  os << "attribute order: " << detail::join_names(plan.attribute_order, vars) << "\n";
  os << "output: " << detail::join_names(plan.output, vars) << (plan.two_phase ? " (distinct, then aggregate)" : "")
     << "\n";
  os << "topdown: " << (plan.topdown ? "true" : "false") << "\n";
  if (!plan.guards.empty()) os << "guards: " << detail::join_names(plan.guards, labels) << "\n";
  for (std::size_t v = 0; v < plan.nodes.size(); ++v) {
    const PlanNode& n = plan.nodes[v];
    os << std::string(2 * static_cast<std::size_t>(n.depth), ' ') << "node " << v << " lambda={"
       << detail::join_names(n.lambda, labels) << "} chi={" << detail::join_names(n.chi, vars) << "} width=" << n.width;
    if (!n.filters.empty()) os << " filters={" << detail::join_names(n.filters, labels) << "}";
    os << " keep={" << detail::join_names(n.keep, vars) << "}";
    if (n.expanding) os << " expanding";
    if (n.dedup_of >= 0) os << " dedup=" << n.dedup_of;
    os << "\n";
  }
  os << "loop nest:\n";
  for (int v : plan.post_order()) {
    const PlanNode& n = plan.nodes[v];
    if (n.dedup_of >= 0) {
      os << "  node " << v << ": reuse node " << n.dedup_of << "\n";
      continue;
    }
    os << "  node " << v << ":\n";
    std::vector<int> atoms = n.lambda;
    atoms.insert(atoms.end(), n.filters.begin(), n.filters.end());
    for (std::size_t i = 0; i < n.chi.size(); ++i) {
      const int x = n.chi[i];
      std::vector<std::string> parts;
      for (int a : atoms) {
        const AtomIR& atom = rule.atoms[a];
        bool uses = false;
        std::string bound;
        for (std::size_t k = 0; k < atom.terms.size(); ++k) {
          const int t = atom.terms[k];
          uses |= t == x;
          bool earlier = t < 0 || std::find(n.chi.begin(), n.chi.begin() + static_cast<std::ptrdiff_t>(i), t) !=
                                      n.chi.begin() + static_cast<std::ptrdiff_t>(i);
          if (earlier && t != x) bound += "[" + detail::term_text(rule, atom, k) + "]";
        }
        if (uses) parts.push_back(labels[a] + bound);
      }
      for (int c : n.children) {
        const auto& child = plan.nodes[c];
        if (std::find(child.keep.begin(), child.keep.end(), x) != child.keep.end())
          parts.push_back("node" + std::to_string(c) + (child.expanding ? "?" : ""));
      }
      os << std::string(4 + 2 * i, ' ') << "for " << vars[x] << " in ";
      for (std::size_t p = 0; p < parts.size(); ++p) os << (p ? " & " : "") << parts[p];
      os << "\n";
    }
    os << std::string(4 + 2 * n.chi.size(), ' ') << "emit {" << detail::join_names(n.keep, vars) << "}\n";
  }
  return os.str();
}

inline nlohmann::json explain_json(const RuleIR& rule, const Plan& plan) {
  const auto labels = detail::atom_labels(rule);
  auto names = [&](const std::vector<int>& ids, const std::vector<std::string>& table) {
    nlohmann::json arr = nlohmann::json::array();
    for (int i : ids) arr.push_back(table[i]);
    return arr;
  };
  nlohmann::json j;
  j["rule"] = rule.head_name();
  j["fhw"] = plan.fhw.to_string();
  j["attribute_order"] = names(plan.attribute_order, rule.variables);
  j["output"] = names(plan.output, rule.variables);
  j["two_phase"] = plan.two_phase;
  j["topdown"] = plan.topdown;
  j["selection_depth"] = plan.selection_depth;
  j["candidates"] = plan.candidates;
  j["guards"] = names(plan.guards, labels);
  j["nodes"] = nlohmann::json::array();
  for (std::size_t v = 0; v < plan.nodes.size(); ++v) {
    const PlanNode& n = plan.nodes[v];
    nlohmann::json node;
    node["id"] = v;
    node["parent"] = n.parent;
    node["depth"] = n.depth;
    node["lambda"] = names(n.lambda, labels);
    node["filters"] = names(n.filters, labels);
    node["chi"] = names(n.chi, rule.variables);
    node["keep"] = names(n.keep, rule.variables);
    node["width"] = n.width.to_string();
    node["expanding"] = n.expanding;
    node["dedup_of"] = n.dedup_of >= 0 ? nlohmann::json(n.dedup_of) : nlohmann::json(nullptr);
    j["nodes"].push_back(std::move(node));
  }
  return j;
}

}  // namespace hyperjoin
