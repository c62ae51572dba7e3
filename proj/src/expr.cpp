#include "magspec/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

namespace magspec {

struct Expression::Node {
  enum class Op { Const, Q1, Q2, Add, Sub, Mul, Div, Pow, Neg, Exp, Sin, Cos };
  Op op;
  cplx value{};
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodeP = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodeP make(Op op, NodeP a = nullptr, NodeP b = nullptr, cplx v = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->value = v;
  return n;
}

class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodeP parse() {
    NodeP e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "expression error at column " << pos_ + 1 << ": " << what << " in \"" << s_ << "\"";
    throw Error(Error::Kind::InvalidInput, os.str());
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodeP expr() {
    NodeP l = term();
    for (;;) {
      if (accept('+'))
        l = make(Op::Add, l, term());
      else if (accept('-'))
        l = make(Op::Sub, l, term());
      else
        return l;
    }
  }

  NodeP term() {
    NodeP l = unary();
    for (;;) {
      if (accept('*'))
        l = make(Op::Mul, l, unary());
      else if (accept('/'))
        l = make(Op::Div, l, unary());
      else
        return l;
    }
  }

  NodeP unary() {
    if (accept('-')) return make(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  // Right-associative; the exponent may carry its own sign.
  NodeP power() {
    NodeP base = primary();
    if (accept('^')) return make(Op::Pow, base, unary());
    return base;
  }

  NodeP primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (accept('(')) {
      NodeP e = expr();
      if (!accept(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return name();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodeP number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return make(Op::Const, nullptr, nullptr, v);
  }

  NodeP name() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    std::string id = s_.substr(start, pos_ - start);
    if (id == "q1") return make(Op::Q1);
    if (id == "q2") return make(Op::Q2);
    if (id == "i") return make(Op::Const, nullptr, nullptr, cplx(0.0, 1.0));
    if (id == "pi") return make(Op::Const, nullptr, nullptr, M_PI);
    Op f;
    if (id == "exp")
      f = Op::Exp;
    else if (id == "sin")
      f = Op::Sin;
    else if (id == "cos")
      f = Op::Cos;
    else {
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    if (!accept('(')) fail("expected '(' after " + id);
    NodeP arg = expr();
    if (!accept(')')) fail("missing ')' after argument of " + id);
    return make(f, arg);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

cplx eval_node(const Expression::Node& n, double q1, double q2) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Q1: return q1;
    case Op::Q2: return q2;
    case Op::Add: return eval_node(*n.a, q1, q2) + eval_node(*n.b, q1, q2);
    case Op::Sub: return eval_node(*n.a, q1, q2) - eval_node(*n.b, q1, q2);
    case Op::Mul: return eval_node(*n.a, q1, q2) * eval_node(*n.b, q1, q2);
    case Op::Div: return eval_node(*n.a, q1, q2) / eval_node(*n.b, q1, q2);
    case Op::Pow: {
      cplx base = eval_node(*n.a, q1, q2), ex = eval_node(*n.b, q1, q2);
      // Integer exponents by repeated multiplication keep real bases exact.
      if (ex.imag() == 0.0 && ex.real() == std::round(ex.real()) && std::abs(ex.real()) <= 64) {
        int k = static_cast<int>(ex.real());
        cplx r = 1.0;
        for (int t = 0; t < std::abs(k); ++t) r *= base;
        return k < 0 ? 1.0 / r : r;
      }
      return std::pow(base, ex);
    }
    case Op::Neg: return -eval_node(*n.a, q1, q2);
    case Op::Exp: return std::exp(eval_node(*n.a, q1, q2));
    case Op::Sin: return std::sin(eval_node(*n.a, q1, q2));
    case Op::Cos: return std::cos(eval_node(*n.a, q1, q2));
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text).parse();
  return e;
}

cplx Expression::eval(double q1, double q2) const {
  if (!root_) throw Error(Error::Kind::InvalidInput, "evaluating an empty expression");
  return eval_node(*root_, q1, q2);
}

}  // namespace magspec
