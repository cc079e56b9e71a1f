#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyperjoin/storage/catalog.hpp"

namespace hyperjoin {

enum class AggOp : std::uint8_t { sum, min, max, count };

inline const char* to_string(AggOp op) {
  switch (op) {
    case AggOp::sum: return "SUM";
    case AggOp::min: return "MIN";
    case AggOp::max: return "MAX";
    case AggOp::count: return "COUNT";
  }
  return "?";
}

struct Term {
  bool is_variable = true;
  /// Variable name, or the constant's literal text without quotes.
  std::string text;

  static Term variable(std::string name) { return {true, std::move(name)}; }
  static Term constant(std::string value) { return {false, std::move(value)}; }
  bool operator==(const Term&) const = default;
};

struct Atom {
  std::string relation;
  std::vector<Term> terms;
  std::size_t line = 0;
  std::size_t column = 0;

  bool operator==(const Atom& o) const { return relation == o.relation && terms == o.terms; }
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Annotation expression tree. `ref` names a scalar (0-arity) relation.
struct Expr {
  enum class Kind : std::uint8_t { number, ref, aggregate, negate, binary };
  Kind kind = Kind::number;
  double number = 0;
  /// Literal text for numbers; relation name for refs; variable (or "*") for aggregates.
  std::string text;
  bool is_float_literal = false;
  AggOp agg = AggOp::sum;
  char op = '+';
  ExprPtr lhs, rhs;

  static ExprPtr make_number(double value, std::string text, bool is_float) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::number;
    e->number = value;
    e->text = std::move(text);
    e->is_float_literal = is_float;
    return e;
  }
  static ExprPtr make_ref(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::ref;
    e->text = std::move(name);
    return e;
  }
  static ExprPtr make_aggregate(AggOp op, std::string var) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::aggregate;
    e->agg = op;
    e->text = std::move(var);
    return e;
  }
  static ExprPtr make_negate(ExprPtr operand) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::negate;
    e->lhs = std::move(operand);
    return e;
  }
  static ExprPtr make_binary(char op, ExprPtr lhs, ExprPtr rhs) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::binary;
    e->op = op;
    e->lhs = std::move(lhs);
    e->rhs = std::move(rhs);
    return e;
  }
};

inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::number: return a->number == b->number && a->is_float_literal == b->is_float_literal;
    case Expr::Kind::ref: return a->text == b->text;
    case Expr::Kind::aggregate: return a->agg == b->agg && a->text == b->text;
    case Expr::Kind::negate: return expr_equal(a->lhs, b->lhs);
    case Expr::Kind::binary: return a->op == b->op && expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
  }
  return false;
}

/// Calls f(const Expr&) on every node, parents first.
template <class F>
void visit_expr(const ExprPtr& e, F&& f) {
  if (!e) return;
  f(*e);
  visit_expr(e->lhs, f);
  visit_expr(e->rhs, f);
}

struct Recursion {
  enum class Kind : std::uint8_t { none, naive, fixpoint };
  Kind kind = Kind::none;
  /// Iteration count for naive(k).
  std::uint32_t iterations = 0;
  bool operator==(const Recursion&) const = default;
};

struct HeadAnnotation {
  std::string alias;
  ValueType type = ValueType::none;
  bool operator==(const HeadAnnotation&) const = default;
};

struct Rule {
  std::string head_name;
  std::vector<std::string> head_keys;
  std::optional<HeadAnnotation> head_annotation;
  std::vector<Atom> body;
  /// Alias on the left of `=` in the annotation section, if any.
  std::optional<std::string> expr_alias;
  ExprPtr expr;
  Recursion recursion;
  std::size_t line = 0;

  bool operator==(const Rule& o) const {
    return head_name == o.head_name && head_keys == o.head_keys && head_annotation == o.head_annotation &&
           body == o.body && expr_alias == o.expr_alias && expr_equal(expr, o.expr) && recursion == o.recursion;
  }
};

using Program = std::vector<Rule>;

}  // namespace hyperjoin
