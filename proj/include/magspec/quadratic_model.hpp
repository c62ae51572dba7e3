#pragma once

#include <vector>

#include "magspec/types.hpp"

namespace magspec {

// Q(x, xi) = a x^2 + 2 b x xi + c xi^2.
//
// omega is a unit rotation with Re(omega Q) positive definite. Forms whose
// real part is only semidefinite (purely imaginary wells) are admitted as
// long as their values lie in an open half-plane.
struct ComplexQuadratic {
  cplx a{}, b{}, c{};
  cplx omega{1.0, 0.0};

  cplx operator()(double x, double xi) const { return a * x * x + 2.0 * b * x * xi + c * xi * xi; }
  cplx det() const { return a * c - b * b; }
};

// Validates sectoriality and picks omega as the bisector of the value
// sector when none is supplied (omega == 0).
ComplexQuadratic make_quadratic(cplx a, cplx b, cplx c, cplx omega = 0.0);

// Angular extent [lo, hi] of {Q(X)}, measured as arg(omega Q(X)).
struct Sector {
  double lo, hi;
};
Sector value_sector(const ComplexQuadratic& Q);

// Root of det Q inside the closed convex cone spanned by the values of Q.
cplx cone_sqrt(const ComplexQuadratic& Q);

struct NormalForm {
  cplx scale;
  double alpha;  // in [0, pi)
};
NormalForm normal_form(const ComplexQuadratic& Q);

std::vector<cplx> quadratic_spectrum(const ComplexQuadratic& Q, int n_max, double h);

// N x N Hermite-basis matrix of the h-Weyl quantization of Q.
MatC quadratic_matrix(const ComplexQuadratic& Q, int N, double h = 1.0);

struct ResolventConstant {
  double D = 0.0;
  int samples = 0;
};

// max ||(z - Q^w)^{-1}|| dist(z, sp) over z in D(0, C h) with
// dist(z, sp) >= h^(3/2 - kappa); sp is the exact ladder.
ResolventConstant quadratic_resolvent_constant(const ComplexQuadratic& Q, double h, double C, double kappa, int N);

// Numerical rank of the Riesz projector of A on the circle |z - center| = radius.
int riesz_rank(const MatC& A, cplx center, double radius, int nodes = 48);

}  // namespace magspec
