#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hyperjoin {

/// Dense 32-bit key produced by dictionary encoding.
using Id = std::uint32_t;

/// Error categories. The CLI maps these onto exit codes (parse/usage -> 2, rest -> 1).
enum class ErrorKind {
  syntax,
  unknown_relation,
  arity_mismatch,
  unsafe_head_variable,
  type_mismatch,
  io,
  row_arity_mismatch,
  overflow,
  annotation_conflict,
  order_violation,
  degenerate_distribution,
  element_absent,
  infeasible,
  query_too_large,
  missing_index,
  eval,
  non_monotone_aggregate,
  snapshot,
  usage,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::syntax: return "SyntaxError";
    case ErrorKind::unknown_relation: return "UnknownRelation";
    case ErrorKind::arity_mismatch: return "ArityMismatch";
    case ErrorKind::unsafe_head_variable: return "UnsafeHeadVariable";
    case ErrorKind::type_mismatch: return "TypeMismatch";
    case ErrorKind::io: return "IoError";
    case ErrorKind::row_arity_mismatch: return "RowArityMismatch";
    case ErrorKind::overflow: return "Overflow";
    case ErrorKind::annotation_conflict: return "AnnotationConflict";
    case ErrorKind::order_violation: return "OrderViolation";
    case ErrorKind::degenerate_distribution: return "DegenerateDistribution";
    case ErrorKind::element_absent: return "ElementAbsent";
    case ErrorKind::infeasible: return "Infeasible";
    case ErrorKind::query_too_large: return "QueryTooLarge";
    case ErrorKind::missing_index: return "MissingIndex";
    case ErrorKind::eval: return "EvalError";
    case ErrorKind::non_monotone_aggregate: return "NonMonotoneAggregate";
    case ErrorKind::snapshot: return "SnapshotError";
    case ErrorKind::usage: return "UsageError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse error carrying a 1-based source position.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, std::size_t line, std::size_t column)
      : Error(ErrorKind::syntax, "line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace hyperjoin
