#pragma once

#include <string>

#include "hyperjoin/frontend/ast.hpp"

namespace hyperjoin {

inline std::string print_expr(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::number: return e->text;
    case Expr::Kind::ref: return e->text;
    case Expr::Kind::aggregate: return std::string("<<") + to_string(e->agg) + "(" + e->text + ")>>";
    case Expr::Kind::negate: return "-" + print_expr(e->lhs);
    case Expr::Kind::binary: return "(" + print_expr(e->lhs) + e->op + print_expr(e->rhs) + ")";
  }
  return "";
}

inline std::string print_term(const Term& t) {
  if (t.is_variable) return t.text;
  bool numeric = !t.text.empty() && std::all_of(t.text.begin(), t.text.end(),
                                                 [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  if (numeric) return t.text;
  if (t.text.find('"') == std::string::npos) return "\"" + t.text + "\"";
  return "`" + t.text + "`";
}

/// Canonical surface syntax; parse_program(print_rule(r)) yields r again.
inline std::string print_rule(const Rule& r) {
  std::string out = r.head_name + "(";
  for (std::size_t i = 0; i < r.head_keys.size(); ++i) out += (i ? "," : "") + r.head_keys[i];
  if (r.head_annotation) out += ";" + r.head_annotation->alias + ":" + to_string(r.head_annotation->type);
  out += ")";
  if (r.recursion.kind == Recursion::Kind::fixpoint) out += "*";
  if (r.recursion.kind == Recursion::Kind::naive) out += "*[i=" + std::to_string(r.recursion.iterations) + "]";
  out += " :- ";
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    const Atom& a = r.body[i];
    out += (i ? "," : "") + a.relation + "(";
    for (std::size_t k = 0; k < a.terms.size(); ++k) out += (k ? "," : "") + print_term(a.terms[k]);
    out += ")";
  }
  if (r.expr) out += "; " + r.expr_alias.value_or("_") + "=" + print_expr(r.expr);
  out += ".";
  return out;
}

inline std::string print_program(const Program& p) {
  std::string out;
  for (const auto& r : p) out += print_rule(r) + "\n";
  return out;
}

}  // namespace hyperjoin
