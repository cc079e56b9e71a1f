#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hyperjoin/frontend/ast.hpp"
#include "hyperjoin/storage/catalog.hpp"

namespace hyperjoin {

/// Name of the relation derived from the default edge relation when a
/// program references it without defining it: 1 / out-degree per node.
inline constexpr const char* derived_inverse_degree = "InvDeg";

struct AtomIR {
  /// Name as written in the rule.
  std::string name;
  /// Relation the atom reads: a catalog relation or an intensional head.
  std::string relation;
  bool intensional = false;
  /// Variable index per column, or -1 for a constant column.
  std::vector<int> terms;
  /// Encoded constant per column (meaningful where terms[k] == -1).
  std::vector<Id> constants;
  /// Some constant is absent from the dictionary, so the atom matches nothing.
  bool empty_selection = false;
  bool annotated = false;
  ValueType annotation_type = ValueType::none;

  std::size_t arity() const { return terms.size(); }
  bool has_selection() const { return std::any_of(terms.begin(), terms.end(), [](int t) { return t < 0; }); }
  /// Distinct variables in first-column order.
  std::vector<int> variables() const {
    std::vector<int> out;
    for (int t : terms)
      if (t >= 0 && std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    return out;
  }
  bool has_repeated_variable() const {
    std::size_t vars = std::count_if(terms.begin(), terms.end(), [](int t) { return t >= 0; });
    return vars != variables().size();
  }
};

struct RuleIR {
  Rule rule;
  std::vector<std::string> variables;
  /// Variable index per head key.
  std::vector<int> head;
  std::vector<AtomIR> atoms;
  ValueType head_type = ValueType::none;
  std::optional<AggOp> aggregate;
  /// Aggregated variable, or -1 for (*).
  int aggregate_var = -1;
  ExprPtr expr;
  Recursion recursion;
  /// The body reads the rule's own head relation.
  bool recursive = false;
  bool seminaive_eligible = false;
  std::vector<std::string> scalar_refs;

  const std::string& head_name() const { return rule.head_name; }
  bool annotated_head() const { return head_type != ValueType::none; }
};

namespace detail {

struct Schema {
  std::size_t arity = 0;
  ValueType type = ValueType::none;
};

class Validator {
 public:
  explicit Validator(const Catalog& catalog) : catalog_(catalog) {}

  RuleIR validate(const Rule& rule) {
    RuleIR ir;
    ir.rule = rule;
    ir.recursion = rule.recursion;
    ir.head_type = rule.head_annotation ? rule.head_annotation->type : ValueType::none;
    ir.expr = rule.expr;
    const bool self_reference = std::any_of(rule.body.begin(), rule.body.end(),
                                            [&](const Atom& a) { return a.relation == rule.head_name; });
    const Schema head_schema{rule.head_keys.size(), ir.head_type};

    if (rule.recursion.kind != Recursion::Kind::none) {
      if (!self_reference && !intensional_.count(rule.head_name))
        throw SyntaxError("recursive rule '" + rule.head_name + "' has no base rule and no self reference",
                          rule.line, 1);
      check_head_against(rule, head_schema);
      intensional_[rule.head_name] = head_schema;
    } else if (self_reference) {
      throw SyntaxError("rule '" + rule.head_name + "' references itself without a recursion marker", rule.line, 1);
    }
    ir.recursive = self_reference;

    auto var_index = [&](const std::string& name) {
      auto it = std::find(ir.variables.begin(), ir.variables.end(), name);
      if (it != ir.variables.end()) return static_cast<int>(it - ir.variables.begin());
      ir.variables.push_back(name);
      return static_cast<int>(ir.variables.size() - 1);
    };

    for (const Atom& atom : rule.body) {
      AtomIR a;
      a.name = atom.relation;
      resolve(atom, a);
      for (const Term& t : atom.terms) {
        if (t.is_variable) {
          a.terms.push_back(var_index(t.text));
          a.constants.push_back(0);
        } else {
          a.terms.push_back(-1);
          auto id = catalog_.dictionary().find(t.text);
          a.constants.push_back(id.value_or(0));
          if (!id) a.empty_selection = true;
        }
      }
      ir.atoms.push_back(std::move(a));
    }
    const std::size_t body_vars = ir.variables.size();

    for (const auto& key : rule.head_keys) {
      auto it = std::find(ir.variables.begin(), ir.variables.begin() + static_cast<std::ptrdiff_t>(body_vars), key);
      if (it == ir.variables.begin() + static_cast<std::ptrdiff_t>(body_vars))
        throw Error(ErrorKind::unsafe_head_variable,
                    "head variable '" + key + "' of '" + rule.head_name + "' does not appear in the body");
      ir.head.push_back(static_cast<int>(it - ir.variables.begin()));
    }

    check_annotation(ir, body_vars);

    ir.seminaive_eligible = rule.recursion.kind == Recursion::Kind::fixpoint && ir.aggregate &&
                            (*ir.aggregate == AggOp::min || *ir.aggregate == AggOp::max);

    if (rule.recursion.kind == Recursion::Kind::none) {
      if (intensional_.count(rule.head_name)) check_head_against(rule, head_schema);
      intensional_[rule.head_name] = head_schema;
    }
    return ir;
  }

 private:
  void check_head_against(const Rule& rule, const Schema& schema) const {
    auto it = intensional_.find(rule.head_name);
    if (it == intensional_.end()) return;
    if (it->second.arity != schema.arity)
      throw Error(ErrorKind::arity_mismatch, "rule '" + rule.head_name + "' redefines arity " +
                                                 std::to_string(it->second.arity) + " as " +
                                                 std::to_string(schema.arity));
    if (it->second.type != schema.type)
      throw Error(ErrorKind::type_mismatch, "rule '" + rule.head_name + "' changes its annotation type");
  }

  void resolve(const Atom& atom, AtomIR& a) const {
    std::size_t arity = atom.terms.size();
    auto check_arity = [&](std::size_t expected) {
      if (expected != arity)
        throw Error(ErrorKind::arity_mismatch, "atom " + atom.relation + " has " + std::to_string(arity) +
                                                   " terms but the relation has arity " + std::to_string(expected));
    };
    if (auto it = intensional_.find(atom.relation); it != intensional_.end()) {
      check_arity(it->second.arity);
      a.relation = atom.relation;
      a.intensional = true;
      a.annotated = it->second.type != ValueType::none;
      a.annotation_type = it->second.type;
      return;
    }
    if (!catalog_.contains(atom.relation) && atom.relation == derived_inverse_degree &&
        catalog_.default_relation() && catalog_.contains(*catalog_.default_relation())) {
      check_arity(1);
      a.relation = atom.relation;
      a.intensional = true;
      a.annotated = true;
      a.annotation_type = ValueType::float_;
      return;
    }
    auto name = catalog_.resolve_name(atom.relation);
    if (!name) throw Error(ErrorKind::unknown_relation, "relation '" + atom.relation + "' is not defined");
    const RelationEntry& entry = catalog_.resolve(atom.relation, arity);
    a.relation = entry.name;
    a.annotated = entry.data.annotated();
    a.annotation_type = a.annotated ? (entry.annotation_type == ValueType::none ? ValueType::float_
                                                                                 : entry.annotation_type)
                                    : ValueType::none;
  }

  void check_annotation(RuleIR& ir, std::size_t body_vars) const {
    const Rule& rule = ir.rule;
    if (rule.head_annotation.has_value() != (rule.expr != nullptr))
      throw Error(ErrorKind::type_mismatch, "rule '" + rule.head_name +
                                                "' must declare a head annotation exactly when it has an annotation expression");
    if (!rule.expr) return;
    if (rule.expr_alias && *rule.expr_alias != rule.head_annotation->alias)
      throw Error(ErrorKind::type_mismatch, "annotation alias '" + *rule.expr_alias + "' does not match head alias '" +
                                                rule.head_annotation->alias + "'");
    bool float_valued = false;
    bool divides = false;
    visit_expr(rule.expr, [&](const Expr& e) {
      switch (e.kind) {
        case Expr::Kind::number:
          float_valued |= e.is_float_literal;
          break;
        case Expr::Kind::binary:
          divides |= e.op == '/';
          break;
        case Expr::Kind::ref: {
          auto it = intensional_.find(e.text);
          std::optional<Schema> schema;
          if (it != intensional_.end()) schema = it->second;
          else if (const RelationEntry* entry = catalog_.find(e.text))
            schema = Schema{entry->arity, entry->data.annotated() ? ValueType::float_ : ValueType::none};
          if (!schema) throw Error(ErrorKind::unknown_relation, "scalar relation '" + e.text + "' is not defined");
          if (schema->arity != 0)
            throw Error(ErrorKind::arity_mismatch, "'" + e.text + "' is used as a scalar but has arity " +
                                                       std::to_string(schema->arity));
          float_valued |= schema->type == ValueType::float_;
          if (std::find(ir.scalar_refs.begin(), ir.scalar_refs.end(), e.text) == ir.scalar_refs.end())
            ir.scalar_refs.push_back(e.text);
          break;
        }
        case Expr::Kind::aggregate: {
          ir.aggregate = e.agg;
          if (e.text == "*") {
            ir.aggregate_var = -1;
          } else {
            auto it = std::find(ir.variables.begin(), ir.variables.begin() + static_cast<std::ptrdiff_t>(body_vars), e.text);
            if (it == ir.variables.begin() + static_cast<std::ptrdiff_t>(body_vars))
              throw Error(ErrorKind::unsafe_head_variable,
                          "aggregated variable '" + e.text + "' does not appear in the body");
            ir.aggregate_var = static_cast<int>(it - ir.variables.begin());
            if (std::find(ir.head.begin(), ir.head.end(), ir.aggregate_var) != ir.head.end())
              throw Error(ErrorKind::type_mismatch, "aggregated variable '" + e.text + "' is also a head key");
          }
          break;
        }
        case Expr::Kind::negate:
          break;
      }
    });
    if (ir.aggregate && *ir.aggregate != AggOp::count)
      for (const auto& a : ir.atoms) float_valued |= a.annotation_type == ValueType::float_;
    if (is_integral(ir.head_type)) {
      if (divides) throw Error(ErrorKind::type_mismatch, "integer annotation '" + rule.head_name + "' uses division");
      if (float_valued)
        throw Error(ErrorKind::type_mismatch, "integer annotation '" + rule.head_name + "' has a float-valued expression");
    }
    // Annotated inputs meet the aggregate only through head and aggregated variables.
    if (ir.aggregate && ir.aggregate_var >= 0) {
      for (const auto& a : ir.atoms) {
        if (!a.annotated) continue;
        for (int v : a.variables()) {
          bool allowed = v == ir.aggregate_var || std::find(ir.head.begin(), ir.head.end(), v) != ir.head.end();
          if (!allowed)
            throw Error(ErrorKind::type_mismatch, "annotated atom " + a.name + " uses variable '" + ir.variables[v] +
                                                      "', which is projected away before aggregation");
        }
      }
    }
  }

  const Catalog& catalog_;
  std::map<std::string, Schema> intensional_;
};

}  // namespace detail

/// Resolves names, arities, variables and constants rule by rule. The catalog
/// is not modified; heads of earlier rules become relations for later ones.
inline std::vector<RuleIR> validate(const Program& program, const Catalog& catalog) {
  detail::Validator validator(catalog);
  std::vector<RuleIR> out;
  out.reserve(program.size());
  for (const Rule& rule : program) out.push_back(validator.validate(rule));
  return out;
}

}  // namespace hyperjoin
