#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cqm/fields.hpp"

namespace cqm {

/// A compiled scalar expression in the variables t, x1..xn.
///
/// Grammar: + - * / ^ (right associative), unary minus, parentheses,
/// sin cos exp sqrt, numeric literals and the constant pi.
class Expression {
 public:
  /// Parses `text`; spatial variables beyond x<max_dim> are rejected.
  /// Throws ConfigError carrying "col N" on malformed input.
  static Expression parse(const std::string& text, int max_dim = 3);
  static Expression constant(double value);

  double operator()(double t, const Vec& x) const;
  const std::string& text() const { return text_; }
  bool is_constant() const;

  ScalarField as_field() const;

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

/// Compiles a list of expressions into a vector-valued field.
VectorField vector_field(const std::vector<Expression>& components);
/// Compiles a row-major n x n list into a matrix field.
MatrixField matrix_field(const std::vector<std::vector<Expression>>& rows);

}  // namespace cqm
