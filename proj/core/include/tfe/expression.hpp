// Tiny arithmetic expression grammar for analytic initial data and
// parameter fields: operators + - * / ^, functions sin cos exp, the
// constant pi, and the variables x and y.
#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "tfe/fespace.hpp"

namespace tfe {

// Parse failure; what() includes the character position.
class ExpressionError : public std::runtime_error {
public:
  ExpressionError(const std::string& message, std::size_t position);
  std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

class Expression {
public:
  // Parses eagerly; throws ExpressionError on any syntax problem.
  explicit Expression(const std::string& text);
  Expression(const Expression&) = default;
  Expression(Expression&&) noexcept = default;
  Expression& operator=(const Expression&) = default;
  Expression& operator=(Expression&&) noexcept = default;

  double eval(double x, double y) const;
  const std::string& text() const { return text_; }

  // Adapter for the interpolation API.
  ScalarFn fn() const;

  struct Node;  // opaque parse-tree node

private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace tfe
