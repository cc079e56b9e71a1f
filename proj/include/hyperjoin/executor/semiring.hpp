#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>

#include "hyperjoin/frontend/validate.hpp"

namespace hyperjoin {

/// Annotation algebra of a rule. Unannotated atoms contribute `one`; `zero`
/// is the identity of the additive fold.
struct Semiring {
  enum class Add { plus, min, max, first };
  enum class Mul { times, plus, ignore };

  Add add = Add::first;
  Mul mul = Mul::ignore;
  double zero = 0.0;
  double one = 1.0;
  /// Stored annotations of base atoms enter products. COUNT multiplies only
  /// child multiplicities, so every base tuple counts once.
  bool reads_atoms = false;

  static Semiring boolean() { return {}; }
  static Semiring count() { return {Add::plus, Mul::times, 0.0, 1.0, false}; }
  static Semiring sum() { return {Add::plus, Mul::times, 0.0, 1.0, true}; }
  /// Tropical: paths add along a join and the best one survives projection.
  static Semiring min() { return {Add::min, Mul::plus, std::numeric_limits<double>::infinity(), 0.0, true}; }
  static Semiring max() { return {Add::max, Mul::times, -std::numeric_limits<double>::infinity(), 1.0, true}; }

  static Semiring for_rule(const RuleIR& rule) {
    if (!rule.aggregate) return boolean();
    switch (*rule.aggregate) {
      case AggOp::sum:
        return sum();
      case AggOp::count:
        return count();
      case AggOp::min:
        return min();
      case AggOp::max:
        return max();
    }
    return boolean();
  }

  /// Same products, but projection keeps any one value. Used when all values
  /// of a group are known to be equal, which turns projection into set semantics.
  Semiring collapsed() const {
    Semiring s = *this;
    s.add = Add::first;
    return s;
  }

  bool idempotent() const { return add != Add::plus; }
  bool uses_annotations() const { return mul != Mul::ignore; }

  double plus(double a, double b) const {
    switch (add) {
      case Add::plus:
        return a + b;
      case Add::min:
        return std::min(a, b);
      case Add::max:
        return std::max(a, b);
      case Add::first:
        return a;
    }
    return a;
  }

  double times(double a, double b) const {
    switch (mul) {
      case Mul::times:
        return a * b;
      case Mul::plus:
        return a + b;
      case Mul::ignore:
        return a;
    }
    return a;
  }

  /// a folded with itself n times (n >= 1).
  double repeat(double a, std::uint64_t n) const { return add == Add::plus ? a * static_cast<double>(n) : a; }
};

}  // namespace hyperjoin
