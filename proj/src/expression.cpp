#include "cqm/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "cqm/errors.hpp"

namespace cqm {

struct Expression::Node {
  enum class Kind { Number, Time, Space, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt };
  Kind kind = Kind::Number;
  double value = 0.0;
  int axis = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return node;
}

class Parser {
 public:
  Parser(const std::string& text, int max_dim) : text_(text), max_dim_(max_dim) {}

  NodePtr run() {
    NodePtr e = sum();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(msg + " in expression '" + text_ + "'", "col " + std::to_string(pos_ + 1));
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr sum() {
    NodePtr lhs = product();
    for (;;) {
      if (accept('+')) lhs = make(Node::Kind::Add, lhs, product());
      else if (accept('-')) lhs = make(Node::Kind::Sub, lhs, product());
      else return lhs;
    }
  }

  NodePtr product() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Node::Kind::Mul, lhs, unary());
      else if (accept('/')) lhs = make(Node::Kind::Div, lhs, unary());
      else return lhs;
    }
  }

  // -a^b parses as -(a^b)
  NodePtr unary() {
    if (accept('-')) return make(Node::Kind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Node::Kind::Pow, base, unary());
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const char* begin = text_.data() + pos_;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    auto node = std::make_shared<Node>();
    node->value = v;
    return node;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string name = text_.substr(start, pos_ - start);
    if (name == "t") return make(Node::Kind::Time);
    if (name == "pi") {
      auto node = std::make_shared<Node>();
      node->value = std::numbers::pi;
      return node;
    }
    if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9') {
      const int axis = name[1] - '1';
      if (axis >= max_dim_) {
        pos_ = start;
        fail("variable " + name + " exceeds chart dimension " + std::to_string(max_dim_));
      }
      auto node = std::make_shared<Node>();
      node->kind = Node::Kind::Space;
      node->axis = axis;
      return node;
    }
    Node::Kind kind;
    if (name == "sin") kind = Node::Kind::Sin;
    else if (name == "cos") kind = Node::Kind::Cos;
    else if (name == "exp") kind = Node::Kind::Exp;
    else if (name == "sqrt") kind = Node::Kind::Sqrt;
    else {
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    if (!accept('(')) fail("expected '(' after " + name);
    NodePtr arg = sum();
    if (!accept(')')) fail("expected ')'");
    return make(kind, arg);
  }

  const std::string& text_;
  int max_dim_;
  std::size_t pos_ = 0;
};

double eval(const Node& n, double t, const Vec& x) {
  using K = Node::Kind;
  switch (n.kind) {
    case K::Number: return n.value;
    case K::Time: return t;
    case K::Space: return x[n.axis];
    case K::Neg: return -eval(*n.lhs, t, x);
    case K::Add: return eval(*n.lhs, t, x) + eval(*n.rhs, t, x);
    case K::Sub: return eval(*n.lhs, t, x) - eval(*n.rhs, t, x);
    case K::Mul: return eval(*n.lhs, t, x) * eval(*n.rhs, t, x);
    case K::Div: return eval(*n.lhs, t, x) / eval(*n.rhs, t, x);
    case K::Pow: {
      const double e = eval(*n.rhs, t, x);
      if (e == 2.0) {
        const double b = eval(*n.lhs, t, x);
        return b * b;
      }
      return std::pow(eval(*n.lhs, t, x), e);
    }
    case K::Sin: return std::sin(eval(*n.lhs, t, x));
    case K::Cos: return std::cos(eval(*n.lhs, t, x));
    case K::Exp: return std::exp(eval(*n.lhs, t, x));
    case K::Sqrt: return std::sqrt(eval(*n.lhs, t, x));
  }
  return 0.0;
}

bool constant_node(const Node& n) {
  using K = Node::Kind;
  if (n.kind == K::Time || n.kind == K::Space) return false;
  if (n.lhs && !constant_node(*n.lhs)) return false;
  if (n.rhs && !constant_node(*n.rhs)) return false;
  return true;
}

}  // namespace

Expression Expression::parse(const std::string& text, int max_dim) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(e.text_, max_dim).run();
  return e;
}

Expression Expression::constant(double value) {
  Expression e;
  auto node = std::make_shared<Node>();
  node->value = value;
  e.root_ = node;
  e.text_ = std::to_string(value);
  return e;
}

double Expression::operator()(double t, const Vec& x) const { return eval(*root_, t, x); }

bool Expression::is_constant() const { return constant_node(*root_); }

ScalarField Expression::as_field() const {
  return [e = *this](double t, const Vec& x) { return e(t, x); };
}

VectorField vector_field(const std::vector<Expression>& components) {
  return [components](double t, const Vec& x) {
    Vec out(static_cast<Eigen::Index>(components.size()));
    for (std::size_t i = 0; i < components.size(); ++i) out[static_cast<Eigen::Index>(i)] = components[i](t, x);
    return out;
  };
}

MatrixField matrix_field(const std::vector<std::vector<Expression>>& rows) {
  return [rows](double t, const Vec& x) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Mat out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](t, x);
    return out;
  };
}

}  // namespace cqm
