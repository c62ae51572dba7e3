#include "magspec/hermite_weyl.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <sstream>
#include <vector>

namespace magspec {

PolySymbol PolySymbol::monomial(int a, int b, cplx c) {
  PolySymbol p;
  p.add({a, b}, c);
  return p;
}

PolySymbol PolySymbol::linear(cplx cx, cplx cxi) {
  PolySymbol p;
  p.add({1, 0}, cx);
  p.add({0, 1}, cxi);
  return p;
}

PolySymbol PolySymbol::quadratic(cplx hxx, cplx hxxi, cplx hxixi) {
  PolySymbol p;
  p.add({2, 0}, hxx);
  p.add({1, 1}, 2.0 * hxxi);
  p.add({0, 2}, hxixi);
  return p;
}

void PolySymbol::add(Monomial m, cplx c) {
  if (m.first < 0 || m.second < 0) throw Error(Error::Kind::InvalidInput, "negative monomial exponent");
  if (c == cplx(0.0)) return;
  terms_[m] += c;
}

int PolySymbol::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.first + m.second);
  return d;
}

bool PolySymbol::is_real() const {
  for (const auto& [m, c] : terms_)
    if (c.imag() != 0.0) return false;
  return true;
}

bool PolySymbol::is_odd() const {
  for (const auto& [m, c] : terms_)
    if ((m.first + m.second) % 2 == 0) return false;
  return true;
}

cplx PolySymbol::operator()(double x, double xi) const {
  cplx s = 0.0;
  for (const auto& [m, c] : terms_) s += c * std::pow(x, m.first) * std::pow(xi, m.second);
  return s;
}

PolySymbol& PolySymbol::operator+=(const PolySymbol& o) {
  for (const auto& [m, c] : o.terms_) add(m, c);
  return *this;
}

PolySymbol operator*(const PolySymbol& a, const PolySymbol& b) {
  PolySymbol r;
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) r.add({ma.first + mb.first, ma.second + mb.second}, ca * cb);
  return r;
}

PolySymbol operator*(cplx s, PolySymbol a) {
  for (auto& [m, c] : a.terms_) c *= s;
  return a;
}

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

namespace {

// Weyl(x^a xi^b) cropped to N, built at N + a + b.
MatC quantize_monomial(int a, int b, int N) {
  const int deg = a + b, K = N + deg;
  SpMatC X(K, K), P(K, K);
  {
    std::vector<Eigen::Triplet<cplx>> tx, tp;
    const double r2 = std::sqrt(2.0);
    for (int n = 1; n < K; ++n) {
      double s = std::sqrt(static_cast<double>(n)) / r2;
      tx.emplace_back(n - 1, n, s);
      tx.emplace_back(n, n - 1, s);
      // (a - a*)/(i sqrt2): -i s above the diagonal, +i s below.
      tp.emplace_back(n - 1, n, cplx(0.0, -s));
      tp.emplace_back(n, n - 1, cplx(0.0, s));
    }
    X.setFromTriplets(tx.begin(), tx.end());
    P.setFromTriplets(tp.begin(), tp.end());
  }
  std::vector<SpMatC> Xp(a + 1);
  Xp[0].resize(K, K);
  Xp[0].setIdentity();
  for (int k = 1; k <= a; ++k) Xp[k] = (Xp[k - 1] * X).pruned();
  SpMatC Pb(K, K);
  Pb.setIdentity();
  for (int k = 1; k <= b; ++k) Pb = (Pb * P).pruned();
  // McCoy: Weyl(x^a xi^b) = 2^{-a} sum_k C(a,k) x^k xi^b x^{a-k}.
  SpMatC acc(K, K);
  for (int k = 0; k <= a; ++k) acc += binom(a, k) * SpMatC(Xp[k] * Pb * Xp[a - k]);
  return MatC(acc).topLeftCorner(N, N) / std::ldexp(1.0, a);
}

// Monomial matrices depend only on (a, b, N); fiber solves reuse them heavily.
std::shared_ptr<const MatC> monomial_matrix(int a, int b, int N) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const MatC>> cache;
  const auto key = std::make_tuple(a, b, N);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto m = std::make_shared<const MatC>(quantize_monomial(a, b, N));
  std::lock_guard<std::mutex> lock(mu);
  if (cache.size() > 4096) cache.clear();
  return cache.emplace(key, std::move(m)).first->second;
}

}  // namespace

MatC weyl_quantize_poly(const PolySymbol& sym, int N) {
  const int deg = sym.degree();
  if (deg > 8) throw Error(Error::Kind::InvalidInput, "weyl_quantize_poly supports degree <= 8");
  if (N < deg + 2 || N < 1) throw Error(Error::Kind::InvalidInput, "truncation N must be at least degree + 2");
  MatC out = MatC::Zero(N, N);
  for (const auto& [m, c] : sym.terms()) out += c * *monomial_matrix(m.first, m.second, N);
  return out;
}

std::array<PolySymbol, 3> fiber_symbols(const GaugeChart& chart, const Point& X2) {
  const HatJets j = chart.hat_jets(X2);
  const double b = j.B.v, a = j.alpha.v;
  using PS = PolySymbol;
  // Displacement X1 = (x1, xi1) acts as (d xi, d x) on the slow chart.
  auto grad = [](const auto& J) { return PS::linear(J.d_xi, J.d_x); };
  auto hess = [](const auto& J) { return PS::quadratic(J.d_xixi, J.d_xix, J.d_xx); };
  const PS xi1 = PS::monomial(0, 1), xi1sq = PS::monomial(0, 2);
  const PS s = PS::linear(1.0, -a);  // x1 - alpha xi1
  const PS gB = grad(j.B), gA = grad(j.alpha), gV = grad(j.V);

  PS p0 = cplx(b * b) * xi1sq + s * s + PS::constant(j.V.v);
  PS p1 = cplx(2.0 * b) * (xi1sq * gB) + cplx(-2.0) * (xi1 * s * gA) + gV;
  const double W = chart.w_coeff() * (j.B.d_xi * j.B.d_xi + j.alpha.d_xi * j.alpha.d_xi);
  PS p2 = xi1sq * gB * gB + cplx(b) * (xi1sq * hess(j.B)) + xi1sq * gA * gA + cplx(-1.0) * (xi1 * s * hess(j.alpha)) +
          cplx(0.5) * hess(j.V) + PS::constant(W);
  return {p0, p1, p2};
}

MatC fiber_P(int j, const GaugeChart& chart, const Point& X2, int N) {
  if (j < 0 || j > 2) throw Error(Error::Kind::InvalidInput, "fiber_P index must be 0, 1 or 2");
  auto p = fiber_symbols(chart, X2);
  return weyl_quantize_poly(p[j], N);
}

namespace {

struct FiberConstants {
  double b, a;
  cplx V;
};

// Even Hermite coefficients of C exp(-gamma x^2): c_{2k+2}/c_{2k} =
// t sqrt((2k+1)(2k+2)) / (2(k+1)), t = (1 - 2 gamma)/(1 + 2 gamma).
GroundState gaussian_state(const Point& X2, const FiberConstants& fc, int N) {
  GroundState g;
  g.X2 = X2;
  const double b = fc.b, a = fc.a, nrm = a * a + b * b;
  g.gamma = cplx(b, -a) / (2.0 * nrm);
  g.C = std::pow(b / (M_PI * nrm), 0.25);
  g.mu = b + fc.V;
  const cplx t = (1.0 - 2.0 * g.gamma) / (1.0 + 2.0 * g.gamma);
  g.coeffs = VecC::Zero(N);
  g.coeffs(0) = g.C * std::pow(M_PI, -0.25) * std::sqrt(M_PI / (g.gamma + 0.5));
  for (int k = 0; 2 * k + 2 < N; ++k)
    g.coeffs(2 * k + 2) = g.coeffs(2 * k) * t * std::sqrt((2.0 * k + 1) * (2.0 * k + 2)) / (2.0 * (k + 1));
  g.coeffs /= g.coeffs.norm();
  return g;
}

FiberConstants constants_at(const GaugeChart& chart, const Point& X2) {
  Point q = chart.phi_inv(X2);
  return {chart.model().B(q), chart.alpha(q), chart.model().V(q)};
}

}  // namespace

GroundState ground_state(const GaugeChart& chart, const Point& X2, int N, bool check) {
  FiberConstants fc = constants_at(chart, X2);
  if (!(fc.b > 0)) throw Error(Error::Kind::InvalidModel, "ground state needs Bhat > 0");
  GroundState g = gaussian_state(X2, fc, N);
  PolySymbol p0 = cplx(fc.b * fc.b) * PolySymbol::monomial(0, 2) +
                  PolySymbol::linear(1.0, -fc.a) * PolySymbol::linear(1.0, -fc.a) + PolySymbol::constant(fc.V);
  MatC P0 = weyl_quantize_poly(p0, N);
  g.residual = (P0 * g.coeffs - g.mu * g.coeffs).norm();
  if (check && g.residual > 1e-8) {
    std::ostringstream os;
    os << "ground-state truncation residual " << g.residual << " at N = " << N << "; increase N";
    throw Error(Error::Kind::Advisory, os.str());
  }
  return g;
}

cplx p1_mean(const GaugeChart& chart, const Point& X2, int N) {
  auto p = fiber_symbols(chart, X2);
  FiberConstants fc = constants_at(chart, X2);
  GroundState g = gaussian_state(X2, fc, N);
  MatC P1 = weyl_quantize_poly(p[1], N);
  return g.coeffs.dot(P1 * g.coeffs);
}

namespace {

Mu1Result mu1_from_symbols(const std::array<PolySymbol, 3>& p, const GroundState& g, cplx z, int N) {
  MatC P0 = weyl_quantize_poly(p[0], N);
  MatC P1 = weyl_quantize_poly(p[1], N);
  MatC P2 = weyl_quantize_poly(p[2], N);
  const VecC& f = g.coeffs;
  VecC w = P1 * f;
  VecC rhs = VecC::Zero(N + 1);
  rhs.head(N) = w - f.dot(w) * f;
  // Bordered system [[P0 - z, f], [f*, 0]] keeps y orthogonal to f.
  MatC Bd = MatC::Zero(N + 1, N + 1);
  Bd.topLeftCorner(N, N) = P0 - z * MatC::Identity(N, N);
  Bd.block(0, N, N, 1) = f;
  Bd.block(N, 0, 1, N) = f.adjoint();
  Eigen::PartialPivLU<MatC> lu(Bd);
  Mu1Result r;
  r.N = N;
  r.rcond = lu.rcond();
  if (!(r.rcond > 1e-12)) {
    Eigen::ComplexEigenSolver<MatC> es(P0, false);
    cplx nearest = es.eigenvalues()(0);
    for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
      if (std::abs(es.eigenvalues()(i) - z) < std::abs(nearest - z)) nearest = es.eigenvalues()(i);
    std::ostringstream os;
    os << "deflated fiber system ill-conditioned at z = " << z << "; nearest fiber eigenvalue " << nearest;
    throw Error(Error::Kind::IllConditioned, os.str());
  }
  VecC y = lu.solve(rhs).head(N);
  r.value = f.dot(P2 * f) - f.dot(P1 * y);
  return r;
}

void check_spectral_parameter(const GaugeChart& chart, const FiberConstants& fc, cplx z) {
  const FieldModel& m = chart.model();
  cplx d = z - (fc.b + fc.V);
  if (!(m.u * d.real() + m.v * d.imag() < 2.0 * m.u * m.b0)) {
    std::ostringstream os;
    os << "spectral parameter z = " << z << " violates the fiber bijectivity condition";
    throw Error(Error::Kind::InvalidInput, os.str());
  }
}

}  // namespace

Mu1Result mu1_fixed(const GaugeChart& chart, const Point& X2, cplx z, int N) {
  FiberConstants fc = constants_at(chart, X2);
  check_spectral_parameter(chart, fc, z);
  auto p = fiber_symbols(chart, X2);
  return mu1_from_symbols(p, gaussian_state(X2, fc, N), z, N);
}

Mu1Result mu1(const GaugeChart& chart, const Point& X2, cplx z, int N0, int N_cap, double rel_tol) {
  FiberConstants fc = constants_at(chart, X2);
  check_spectral_parameter(chart, fc, z);
  auto p = fiber_symbols(chart, X2);
  Mu1Result prev = mu1_from_symbols(p, gaussian_state(X2, fc, N0), z, N0);
  for (int N = 2 * N0; N <= N_cap; N *= 2) {
    Mu1Result cur = mu1_from_symbols(p, gaussian_state(X2, fc, N), z, N);
    if (std::abs(cur.value - prev.value) <= rel_tol * std::max(std::abs(cur.value), 1e-5)) return cur;
    prev = cur;
  }
  std::ostringstream os;
  os << "mu1 not converged in N up to " << N_cap << " at X2 = (" << X2[0] << ", " << X2[1] << ")";
  throw Error(Error::Kind::NoConvergence, os.str());
}

}  // namespace magspec
