#pragma once

#include <memory>
#include <string>

#include "magspec/types.hpp"

namespace magspec {

// Arithmetic over q1, q2 with + - * / ^, unary minus, parentheses,
// exp/sin/cos, numeric literals and the constants i, pi.
class Expression {
public:
  struct Node;

  static Expression parse(const std::string& text);

  cplx eval(double q1, double q2) const;
  cplx operator()(const Point& q) const { return eval(q[0], q[1]); }
  const std::string& text() const { return text_; }

private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace magspec
