#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace chronexp {

/// Byte offsets into a source text, half-open.
struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

enum class ErrorKind {
  DivisionByZero,
  UnsupportedFunction,
  UnboundSymbol,
  DomainError,
  SyntaxError,
  UnknownIdentifier,
  MixedDerivativeOrderTooHigh,
  SchemaError,
  ValidationError,
  ExpressionBlowup,
  NonPolynomialRhs,
  NonFiniteValue,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::UnsupportedFunction: return "UnsupportedFunction";
    case ErrorKind::UnboundSymbol: return "UnboundSymbol";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::MixedDerivativeOrderTooHigh: return "MixedDerivativeOrderTooHigh";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::ExpressionBlowup: return "ExpressionBlowup";
    case ErrorKind::NonPolynomialRhs: return "NonPolynomialRhs";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
  }
  return "Error";
}

/// The single exception type of the library. The kind selects the failure
/// class; parse-stage errors additionally carry the offending span.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<SourceSpan> span = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        span_(span) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::optional<SourceSpan>& span() const noexcept { return span_; }

 private:
  ErrorKind kind_;
  std::optional<SourceSpan> span_;
};

}  // namespace chronexp
