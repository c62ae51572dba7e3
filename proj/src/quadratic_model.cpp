#include "magspec/quadratic_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "magspec/eigensolve.hpp"
#include "magspec/hermite_weyl.hpp"

namespace magspec {

namespace {

// Q on the unit half-circle: (a + c)/2 + (a - c)/2 cos 2t + b sin 2t.
cplx on_circle(const ComplexQuadratic& Q, double t) { return Q(std::cos(t), std::sin(t)); }

// Extremes of arg(Q(t) / ref) over t in [0, pi), refined by ternary search.
Sector raw_sector(const ComplexQuadratic& Q, cplx ref) {
  constexpr int n = 2048;
  auto ang = [&](double t) { return std::arg(on_circle(Q, t) / ref); };
  int ilo = 0, ihi = 0;
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < n; ++i) {
    double a = ang(M_PI * i / n);
    if (a < lo) lo = a, ilo = i;
    if (a > hi) hi = a, ihi = i;
  }
  auto refine = [&](int i0, double sign) {
    double l = M_PI * (i0 - 1) / n, r = M_PI * (i0 + 1) / n;
    for (int it = 0; it < 80; ++it) {
      double m1 = l + (r - l) / 3, m2 = r - (r - l) / 3;
      if (sign * ang(m1) > sign * ang(m2))
        r = m2;
      else
        l = m1;
    }
    return ang(0.5 * (l + r));
  };
  return {std::min(lo, refine(ilo, -1.0)), std::max(hi, refine(ihi, 1.0))};
}

void require_sectorial(const ComplexQuadratic& Q) {
  Eigen::Matrix2d R;
  cplx a = Q.omega * Q.a, b = Q.omega * Q.b, c = Q.omega * Q.c;
  R << a.real(), b.real(), b.real(), c.real();
  if (!(a.real() > 0 && c.real() > 0 && R.determinant() > 0)) {
    std::ostringstream os;
    os << "quadratic form is not sectorial: Re(omega Q) not positive definite (omega = " << Q.omega << ")";
    throw Error(Error::Kind::InvalidInput, os.str());
  }
}

}  // namespace

ComplexQuadratic make_quadratic(cplx a, cplx b, cplx c, cplx omega) {
  ComplexQuadratic Q{a, b, c, 1.0};
  if (omega != cplx(0.0)) {
    Q.omega = omega / std::abs(omega);
  } else {
    cplx center = 0.5 * (a + c);
    if (std::abs(center) == 0.0) throw Error(Error::Kind::InvalidInput, "quadratic form values enclose the origin");
    cplx ref = center / std::abs(center);
    Sector s = raw_sector(Q, ref);
    Q.omega = std::conj(ref) * std::polar(1.0, -0.5 * (s.lo + s.hi));
  }
  require_sectorial(Q);
  return Q;
}

Sector value_sector(const ComplexQuadratic& Q) { return raw_sector(Q, std::conj(Q.omega)); }

cplx cone_sqrt(const ComplexQuadratic& Q) {
  require_sectorial(Q);
  const cplx r = std::sqrt(Q.det());
  const Sector s = value_sector(Q);
  constexpr double tol = 1e-8;
  auto inside = [&](cplx z) {
    double t = std::arg(Q.omega * z);
    return t >= s.lo - tol && t <= s.hi + tol;
  };
  bool ip = inside(r), im = inside(-r);
  if (ip == im) {
    std::ostringstream os;
    os << "cone branch ambiguous for sqrt(det Q): candidates " << r << " and " << -r;
    throw Error(Error::Kind::Ambiguous, os.str());
  }
  return ip ? r : -r;
}

NormalForm normal_form(const ComplexQuadratic& Q) {
  require_sectorial(Q);
  const cplx w = Q.omega;
  const cplx a = w * Q.a, b = w * Q.b, c = w * Q.c;
  Eigen::Matrix2d R, S;
  R << a.real(), b.real(), b.real(), c.real();
  S << a.imag(), b.imag(), b.imag(), c.imag();
  // R = r M^2 with M symmetric, det M = 1; Y = M X is symplectic and
  // turns R into r |Y|^2.
  const double r = std::sqrt(R.determinant());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> er(R / r);
  Eigen::Matrix2d Minv = er.eigenvectors() * er.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                         er.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Minv * S * Minv);
  const cplx px(r, es.eigenvalues()(0)), pxi(r, es.eigenvalues()(1));
  NormalForm nf;
  nf.alpha = std::abs(std::arg(px / pxi));
  const cplx c0 = cone_sqrt(Q);
  nf.scale = c0 * std::polar(1.0, -0.5 * nf.alpha);
  return nf;
}

std::vector<cplx> quadratic_spectrum(const ComplexQuadratic& Q, int n_max, double h) {
  const cplx c0 = cone_sqrt(Q);
  std::vector<cplx> out;
  for (int n = 1; n <= n_max; ++n) out.push_back((2.0 * n - 1.0) * c0 * h);
  return out;
}

MatC quadratic_matrix(const ComplexQuadratic& Q, int N, double h) {
  PolySymbol p = PolySymbol::quadratic(Q.a, Q.b, Q.c);
  return h * weyl_quantize_poly(p, N);
}

ResolventConstant quadratic_resolvent_constant(const ComplexQuadratic& Q, double h, double C, double kappa, int N) {
  const MatC A = quadratic_matrix(Q, N, h);
  const cplx c0 = cone_sqrt(Q);
  const double R = C * h, rmin = std::pow(h, 1.5 - kappa);
  std::vector<cplx> sp;
  for (int n = 1; (2.0 * n - 1.0) * std::abs(c0) * h <= R + 2.0 * rmin + 2.0 * std::abs(c0) * h; ++n)
    sp.push_back((2.0 * n - 1.0) * c0 * h);
  auto dist = [&](cplx z) {
    double d = INFINITY;
    for (cplx s : sp) d = std::min(d, std::abs(z - s));
    return d;
  };
  std::vector<cplx> zs;
  for (int k = 1; k <= 8; ++k)
    for (int t = 0; t < 32; ++t) zs.push_back(std::polar(R * k / 8.0, 2.0 * M_PI * (t + 0.5 * (k % 2)) / 32.0));
  for (cplx s : sp)
    for (int t = 0; t < 16; ++t) zs.push_back(s + std::polar(rmin, 2.0 * M_PI * t / 16.0));
  ResolventConstant out;
  for (cplx z : zs) {
    double d = dist(z);
    if (std::abs(z) > R * (1.0 + 1e-12) || d < rmin * (1.0 - 1e-12)) continue;
    out.D = std::max(out.D, resolvent_norm(A, z) * d);
    ++out.samples;
  }
  return out;
}

int riesz_rank(const MatC& A, cplx center, double radius, int nodes) {
  const Eigen::Index n = A.rows();
  MatC P = MatC::Zero(n, n);
  const MatC Id = MatC::Identity(n, n);
  for (int k = 0; k < nodes; ++k) {
    const cplx e = std::polar(1.0, 2.0 * M_PI * (k + 0.5) / nodes);
    const cplx z = center + radius * e;
    // (1/2 pi i) dz = radius e dtheta / (2 pi).
    P += (radius * e / static_cast<double>(nodes)) * Eigen::PartialPivLU<MatC>(z * Id - A).solve(Id);
  }
  Eigen::JacobiSVD<MatC> svd(P);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) < 1e-8) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-6 * s(0)) ++rank;
  return rank;
}

}  // namespace magspec
