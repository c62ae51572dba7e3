#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "magspec/effective_op.hpp"
#include "magspec/hermite_weyl.hpp"
#include "magspec/models.hpp"

using namespace magspec;

namespace {

// Orthonormal Hermite functions sampled on a grid, scaled by sqrt(dx) so the
// columns are orthonormal in the discrete inner product.
MatC hermite_columns(const std::vector<double>& x, int count) {
  const double dx = x[1] - x[0];
  MatC H(static_cast<Eigen::Index>(x.size()), count);
  for (std::size_t j = 0; j < x.size(); ++j) {
    double pm = 0.0, p = std::pow(M_PI, -0.25) * std::exp(-0.5 * x[j] * x[j]);
    for (int n = 0; n < count; ++n) {
      H(j, n) = p * std::sqrt(dx);
      double next = std::sqrt(2.0 / (n + 1)) * x[j] * p - std::sqrt(static_cast<double>(n) / (n + 1)) * pm;
      pm = p;
      p = next;
    }
  }
  return H;
}

// Independent quantizer: periodic midpoint Weyl grid projected on Hermite functions.
MatC grid_oracle(const Symbol1D& s, int count, int M, double L) {
  GridWeylOperator g = assemble_weyl_grid(s, M, L, 1.0);
  MatC H = hermite_columns(g.x, count);
  return H.adjoint() * g.matrix * H;
}

double max_abs(const MatC& A) { return A.cwiseAbs().maxCoeff(); }

const Point kX2{0.3, -0.2};

}  // namespace

TEST_CASE("harmonic oscillator symbol is diagonal") {
  MatC A = weyl_quantize_poly(PolySymbol::monomial(2, 0) + PolySymbol::monomial(0, 2), 5);
  MatC expected = MatC::Zero(5, 5);
  for (int n = 0; n < 5; ++n) expected(n, n) = 2.0 * n + 1.0;
  CHECK(max_abs(A - expected) <= 1e-14);
}

TEST_CASE("position symbol is the ladder sum") {
  MatC A = weyl_quantize_poly(PolySymbol::monomial(1, 0), 3);
  MatC expected = MatC::Zero(3, 3);
  for (int n = 1; n < 3; ++n) expected(n - 1, n) = expected(n, n - 1) = std::sqrt(n / 2.0);
  CHECK(max_abs(A - expected) <= 1e-15);
}

TEST_CASE("mixed symbol agrees with grid quantization") {
  MatC A = weyl_quantize_poly(PolySymbol::monomial(1, 1), 4);
  MatC G = grid_oracle([](double x, double xi) { return cplx(x * xi); }, 4, 1024, 12.0);
  CHECK(max_abs(A - G) <= 1e-8);
  // (x xi + xi x)/2 is symmetric, so the matrix is Hermitian with imaginary entries.
  CHECK(max_abs(A - A.adjoint()) <= 1e-15);
}

TEST_CASE("random symbols agree with grid quantization") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  // Mixed monomials feel the periodic wrap, which decays like exp(-L^2 / 5).
  const int M = 512;
  const double L = 16.0;
  // Linearity lets each monomial be quantized on the grid once.
  std::map<std::pair<int, int>, MatC> grid;
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b)
      grid[{a, b}] = grid_oracle(
          [a, b](double x, double xi) { return cplx(std::pow(x, a) * std::pow(xi, b)); }, 8, M, L);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    PolySymbol s;
    MatC G = MatC::Zero(8, 8);
    for (const auto& [m, Gm] : grid) {
      cplx c(u(rng), u(rng));
      s += PolySymbol::monomial(m.first, m.second, c);
      G += c * Gm;
    }
    worst = std::max(worst, max_abs(weyl_quantize_poly(s, 12).topLeftCorner(8, 8) - G));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("quantization is linear and respects symbol parity and reality") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  PolySymbol s, t, real, odd;
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b) {
      s += PolySymbol::monomial(a, b, cplx(u(rng), u(rng)));
      t += PolySymbol::monomial(a, b, cplx(u(rng), u(rng)));
      real += PolySymbol::monomial(a, b, u(rng));
      if ((a + b) % 2 == 1) odd += PolySymbol::monomial(a, b, cplx(u(rng), u(rng)));
    }
  const cplx al(0.7, -0.2), be(-1.3, 0.4);
  MatC lhs = weyl_quantize_poly(al * s + be * t, 20);
  MatC rhs = al * weyl_quantize_poly(s, 20) + be * weyl_quantize_poly(t, 20);
  CHECK(max_abs(lhs - rhs) <= 1e-12 * (1.0 + max_abs(rhs)));

  REQUIRE(real.is_real());
  MatC R = weyl_quantize_poly(real, 30);
  CHECK(max_abs(R - R.adjoint()) <= 1e-13 * max_abs(R));

  REQUIRE(odd.is_odd());
  MatC O = weyl_quantize_poly(odd, 30);
  CHECK(O.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("band structure follows the degree") {
  PolySymbol s = PolySymbol::monomial(3, 0, 1.0) + PolySymbol::monomial(1, 2, I);
  MatC A = weyl_quantize_poly(s, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c)
      if (std::abs(r - c) > 3) CHECK(A(r, c) == cplx(0.0));
}

TEST_CASE("size validation") {
  CHECK_THROWS_AS(weyl_quantize_poly(PolySymbol::monomial(9, 0), 20), Error);
  CHECK_THROWS_AS(weyl_quantize_poly(PolySymbol::monomial(4, 0), 5), Error);
}

TEST_CASE("constant field: no first-order fiber term and Landau fiber spectrum") {
  GaugeChart chart(expression_model("1.5", "0", 1.5, 1, 0));
  CHECK(max_abs(fiber_P(1, chart, kX2, 16)) == 0.0);
  MatC P0 = fiber_P(0, chart, kX2, 64);
  Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<MatC>(P0).eigenvalues();
  for (int n = 1; n <= 16; ++n) CHECK(std::abs(ev(n - 1) - (2 * n - 1) * 1.5) <= 1e-9);
  CHECK(std::abs(mu1_fixed(chart, kX2, 1.5, 64).value) <= 1e-14);
}

TEST_CASE("fiber spectrum of the radial well") {
  GaugeChart chart(make_model("radial_well"));
  const Point X2 = chart.phi({0.5, 0.5});
  const double b = chart.Bhat(X2);
  MatC P0 = fiber_P(0, chart, X2, 64);
  REQUIRE(max_abs(P0 - P0.adjoint()) <= 1e-13);
  Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<MatC>(P0).eigenvalues();
  for (int n = 1; n <= 16; ++n) CHECK(std::abs(ev(n - 1) - (2 * n - 1) * b) <= 1e-8 * n);
}

TEST_CASE("fiber spectrum with complex potential") {
  GaugeChart chart(make_model("perturbed_well(0.3)"));
  const Point X2 = chart.phi({0.8, -0.4});
  const cplx mu = chart.Bhat(X2) + chart.Vhat(X2);
  Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<MatC>(fiber_P(0, chart, X2, 64)).eigenvalues();
  for (int n = 1; n <= 16; ++n) {
    cplx target = (2.0 * n - 1.0) * chart.Bhat(X2) + chart.Vhat(X2);
    double best = INFINITY;
    for (Eigen::Index k = 0; k < ev.size(); ++k) best = std::min(best, std::abs(ev(k) - target));
    CHECK(best <= 1e-8 * n);
  }
  CHECK(std::abs(ground_state(chart, X2, 64).mu - mu) <= 1e-15);
}

TEST_CASE("standard Gaussian is the first Hermite function") {
  GaugeChart chart(make_model("landau"));
  GroundState g = ground_state(chart, {0.2, 0.1}, 32);
  CHECK(std::abs(g.coeffs(0) - 1.0) <= 1e-15);
  CHECK(g.coeffs.tail(31).norm() <= 1e-15);
  CHECK(std::abs(g.mu - 1.0) <= 1e-15);
  CHECK(std::abs(g.C - std::pow(M_PI, -0.25)) <= 1e-15);
}

TEST_CASE("ground state with field 2 and alpha 0.7") {
  // alpha = 0.7 q1 for this field, so (1, 0) has B = 2 and alpha = 0.7.
  GaugeChart c2(expression_model("2 + 0.7*q2", "0", 1.0, 1, 0, {-1, 1, -1, 1}));
  Point X2 = c2.phi({1.0, 0.0});
  REQUIRE(std::abs(c2.Bhat(X2) - 2.0) <= 1e-12);
  REQUIRE(std::abs(c2.alphahat(X2) - 0.7) <= 1e-10);
  GroundState g = ground_state(c2, X2, 64);
  CHECK(std::abs(g.coeffs.norm() - 1.0) <= 1e-12);
  CHECK(g.residual <= 1e-8);
  MatC P0 = fiber_P(0, c2, X2, 64);
  CHECK((P0 * g.coeffs - g.mu * g.coeffs).norm() <= 1e-8);
  CHECK(std::abs(g.gamma - cplx(2.0, -0.7) / (2.0 * (4.0 + 0.49))) <= 1e-13);
}

TEST_CASE("ground-state advisory at small truncation") {
  GaugeChart c2(expression_model("2 + 0.7*q2", "0", 1.0, 1, 0, {-1, 1, -1, 1}));
  Point X2 = c2.phi({1.0, 0.0});
  CHECK_THROWS_AS(ground_state(c2, X2, 4), Error);
  CHECK_NOTHROW(ground_state(c2, X2, 4, false));
}

TEST_CASE("first-order fiber term has zero mean") {
  GaugeChart flat(make_model("landau"));
  CHECK(std::abs(p1_mean(flat, {0.5, 0.5}, 64)) == 0.0);
  GaugeChart chart(make_model("radial_well"));
  const Point X2 = chart.phi({0.3, -0.2});
  for (int N : {32, 64, 128}) CHECK(std::abs(p1_mean(chart, X2, N)) <= 1e-10);
}

TEST_CASE("subprincipal term matches an orthogonal-complement solve") {
  for (const char* key : {"radial_well", "imaginary_well", "perturbed_well(0.3)"}) {
    GaugeChart chart(make_model(key));
    const Point X2 = chart.phi({0.4, 0.3});
    const int N = 64;
    auto p = fiber_symbols(chart, X2);
    MatC P0 = weyl_quantize_poly(p[0], N), P1 = weyl_quantize_poly(p[1], N), P2 = weyl_quantize_poly(p[2], N);
    GroundState g = ground_state(chart, X2, N);
    const VecC& f = g.coeffs;
    const cplx z = 1.0;
    // Complement basis from a full QR of f.
    MatC Q = Eigen::HouseholderQR<MatC>(f).householderQ();
    MatC Qp = Q.rightCols(N - 1);
    VecC w = P1 * f;
    VecC rhs = Qp.adjoint() * (w - f.dot(w) * f);
    MatC A = Qp.adjoint() * (P0 - z * MatC::Identity(N, N)) * Qp;
    VecC y = Qp * A.fullPivLu().solve(rhs);
    cplx oracle = f.dot(P2 * f) - f.dot(P1 * y);
    cplx got = mu1_fixed(chart, X2, z, N).value;
    CHECK_MESSAGE(std::abs(got - oracle) <= 1e-11 * (1.0 + std::abs(oracle)), key);
  }
}

TEST_CASE("subprincipal term converges in the truncation") {
  GaugeChart chart(make_model("radial_well"));
  const Point X0 = chart.phi({0.0, 0.0});
  cplx a = mu1_fixed(chart, X0, 1.0, 64).value, b = mu1_fixed(chart, X0, 1.0, 128).value;
  CHECK(std::abs(a - b) <= 1e-7 * std::abs(b));
  Mu1Result r = mu1(chart, X0, 1.0);
  CHECK(std::abs(r.value - b) <= 1e-7 * std::abs(b));
}

TEST_CASE("subprincipal term ignores the phase of the ground state") {
  GaugeChart chart(make_model("perturbed_well(0.3)"));
  const Point X2 = chart.phi({0.4, 0.3});
  const int N = 64;
  auto p = fiber_symbols(chart, X2);
  MatC P0 = weyl_quantize_poly(p[0], N), P1 = weyl_quantize_poly(p[1], N), P2 = weyl_quantize_poly(p[2], N);
  VecC f = ground_state(chart, X2, N).coeffs * std::polar(1.0, 1.1);
  MatC Bd = MatC::Zero(N + 1, N + 1);
  Bd.topLeftCorner(N, N) = P0 - MatC::Identity(N, N);
  Bd.block(0, N, N, 1) = f;
  Bd.block(N, 0, 1, N) = f.adjoint();
  VecC w = P1 * f, rhs = VecC::Zero(N + 1);
  rhs.head(N) = w - f.dot(w) * f;
  VecC y = Bd.partialPivLu().solve(rhs).head(N);
  cplx rotated = f.dot(P2 * f) - f.dot(P1 * y);
  CHECK(std::abs(rotated - mu1_fixed(chart, X2, 1.0, N).value) <= 1e-12);
}

TEST_CASE("spectral parameter outside the bijectivity region is rejected") {
  GaugeChart chart(make_model("radial_well"));
  const Point X0 = chart.phi({0.0, 0.0});
  CHECK_THROWS_AS(mu1_fixed(chart, X0, 3.5, 64), Error);
}
