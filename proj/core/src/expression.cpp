#include "tfe/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <utility>
#include <vector>

namespace tfe {

ExpressionError::ExpressionError(const std::string& message,
                                 std::size_t position)
    : std::runtime_error(message + " (at position " +
                         std::to_string(position) + ")"),
      position_(position) {}

namespace {

enum class NodeKind { constant, var_x, var_y, add, sub, mul, div, pow, neg,
                      fn_sin, fn_cos, fn_exp };

}  // namespace

struct Expression::Node {
  NodeKind kind;
  double value = 0.0;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_node(NodeKind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr,
                  double value = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->value = value;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
public:
  explicit Parser(const std::string& text) : text_(text) {}

  NodePtr parse() {
    NodePtr e = parse_sum();
    skip_space();
    if (pos_ != text_.size())
      throw ExpressionError("unexpected trailing input", pos_);
    return e;
  }

private:
  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool consume(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    for (;;) {
      if (consume('+'))
        lhs = make_node(NodeKind::add, lhs, parse_product());
      else if (consume('-'))
        lhs = make_node(NodeKind::sub, lhs, parse_product());
      else
        return lhs;
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (consume('*'))
        lhs = make_node(NodeKind::mul, lhs, parse_unary());
      else if (consume('/'))
        lhs = make_node(NodeKind::div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  NodePtr parse_unary() {
    if (consume('-')) return make_node(NodeKind::neg, parse_unary());
    if (consume('+')) return parse_unary();
    return parse_power();
  }

  // Exponentiation binds tighter than unary minus and associates to the
  // right: -2^2 = -4 and 2^3^2 = 512.
  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (consume('^')) {
      NodePtr exponent = parse_unary();
      return make_node(NodeKind::pow, base, exponent);
    }
    return base;
  }

  NodePtr parse_primary() {
    skip_space();
    if (pos_ >= text_.size())
      throw ExpressionError("unexpected end of expression", pos_);
    const char c = text_[pos_];

    if (c == '(') {
      ++pos_;
      NodePtr e = parse_sum();
      if (!consume(')'))
        throw ExpressionError("expected ')'", pos_);
      return e;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin)
        throw ExpressionError("malformed number", pos_);
      pos_ += static_cast<std::size_t>(end - begin);
      return make_node(NodeKind::constant, nullptr, nullptr, v);
    }

    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isalpha(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
      const std::string name = text_.substr(start, pos_ - start);
      if (name == "x") return make_node(NodeKind::var_x);
      if (name == "y") return make_node(NodeKind::var_y);
      if (name == "pi")
        return make_node(NodeKind::constant, nullptr, nullptr,
                         3.14159265358979323846264338327950288);
      NodeKind fn;
      if (name == "sin")
        fn = NodeKind::fn_sin;
      else if (name == "cos")
        fn = NodeKind::fn_cos;
      else if (name == "exp")
        fn = NodeKind::fn_exp;
      else
        throw ExpressionError("unknown name '" + name + "'", start);
      if (!consume('('))
        throw ExpressionError("expected '(' after '" + name + "'", pos_);
      NodePtr arg = parse_sum();
      if (!consume(')'))
        throw ExpressionError("expected ')'", pos_);
      return make_node(fn, arg);
    }

    throw ExpressionError(std::string("unexpected character '") + c + "'",
                          pos_);
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

double eval_node(const Expression::Node& n, double x, double y) {
  switch (n.kind) {
    case NodeKind::constant: return n.value;
    case NodeKind::var_x: return x;
    case NodeKind::var_y: return y;
    case NodeKind::add: return eval_node(*n.lhs, x, y) + eval_node(*n.rhs, x, y);
    case NodeKind::sub: return eval_node(*n.lhs, x, y) - eval_node(*n.rhs, x, y);
    case NodeKind::mul: return eval_node(*n.lhs, x, y) * eval_node(*n.rhs, x, y);
    case NodeKind::div: return eval_node(*n.lhs, x, y) / eval_node(*n.rhs, x, y);
    case NodeKind::pow:
      return std::pow(eval_node(*n.lhs, x, y), eval_node(*n.rhs, x, y));
    case NodeKind::neg: return -eval_node(*n.lhs, x, y);
    case NodeKind::fn_sin: return std::sin(eval_node(*n.lhs, x, y));
    case NodeKind::fn_cos: return std::cos(eval_node(*n.lhs, x, y));
    case NodeKind::fn_exp: return std::exp(eval_node(*n.lhs, x, y));
  }
  return 0.0;  // unreachable
}

}  // namespace

Expression::Expression(const std::string& text) : text_(text) {
  root_ = Parser(text_).parse();
}

double Expression::eval(double x, double y) const {
  return eval_node(*root_, x, y);
}

ScalarFn Expression::fn() const {
  auto root = root_;
  return [root](double x, double y) { return eval_node(*root, x, y); };
}

}  // namespace tfe
