#pragma once

#include <array>
#include <map>
#include <utility>

#include "magspec/fields.hpp"
#include "magspec/types.hpp"

namespace magspec {

// Sum of c_ab x^a xi^b.
class PolySymbol {
public:
  using Monomial = std::pair<int, int>;

  PolySymbol() = default;
  static PolySymbol constant(cplx c) { return monomial(0, 0, c); }
  static PolySymbol monomial(int a, int b, cplx c = 1.0);
  // g_xi * x + g_x * xi, the linear form of a gradient on the fiber.
  static PolySymbol linear(cplx cx, cplx cxi);
  // h_xixi x^2 + 2 h_xix x xi + h_xx xi^2.
  static PolySymbol quadratic(cplx hxx, cplx hxxi, cplx hxixi);

  const std::map<Monomial, cplx>& terms() const { return terms_; }
  int degree() const;
  bool is_real() const;
  bool is_odd() const;  // every monomial of odd total degree
  cplx operator()(double x, double xi) const;

  PolySymbol& operator+=(const PolySymbol& o);
  friend PolySymbol operator+(PolySymbol a, const PolySymbol& b) { return a += b; }
  friend PolySymbol operator*(const PolySymbol& a, const PolySymbol& b);
  friend PolySymbol operator*(cplx s, PolySymbol a);

private:
  void add(Monomial m, cplx c);
  std::map<Monomial, cplx> terms_;
};

// Weyl-ordered quantization in the Hermite basis, x = (a + a*)/sqrt2,
// xi = (a - a*)/(i sqrt2). Built at N + degree and cropped, so every
// retained entry is exact.
MatC weyl_quantize_poly(const PolySymbol& sym, int N);

// Taylor coefficients p0, p1, p2 of the conjugated symbol at the slow
// point X2 = (xi2, x2), as polynomials in the fiber variables (x1, xi1).
std::array<PolySymbol, 3> fiber_symbols(const GaugeChart& chart, const Point& X2);

MatC fiber_P(int j, const GaugeChart& chart, const Point& X2, int N);

struct GroundState {
  Point X2{};
  cplx gamma{};  // f = C exp(-gamma x1^2)
  double C = 0.0;
  cplx mu{};     // Bhat + Vhat
  VecC coeffs;   // normalized Hermite coefficients
  double residual = 0.0;
};

// Throws Advisory when N is too small for a 1e-8 residual and check is set.
GroundState ground_state(const GaugeChart& chart, const Point& X2, int N, bool check = true);

cplx p1_mean(const GaugeChart& chart, const Point& X2, int N);

struct Mu1Result {
  cplx value{};
  int N = 0;
  double rcond = 0.0;
};

// Fixed truncation.
Mu1Result mu1_fixed(const GaugeChart& chart, const Point& X2, cplx z, int N);

// Doubles N from N0 until consecutive values agree to rel_tol.
Mu1Result mu1(const GaugeChart& chart, const Point& X2, cplx z, int N0 = 64, int N_cap = 512,
              double rel_tol = 1e-7);

}  // namespace magspec
