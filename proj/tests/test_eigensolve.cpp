#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "magspec/direct2d.hpp"
#include "magspec/eigensolve.hpp"
#include "magspec/models.hpp"

using namespace magspec;

namespace {

SpMatC sparse_of(const MatC& A) { return A.sparseView(); }

SpMatC sparse_diag(const std::vector<double>& d) {
  SpMatC M(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  std::vector<Eigen::Triplet<cplx>> t;
  for (std::size_t i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

MatC random_matrix(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  MatC A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(nd(rng), nd(rng));
  return A;
}

// Eigenvalues of a sorted by distance to c, truncated to k.
std::vector<cplx> nearest(std::vector<cplx> a, cplx c, std::size_t k) {
  std::sort(a.begin(), a.end(), [&](cplx x, cplx y) { return std::abs(x - c) < std::abs(y - c); });
  a.resize(std::min(k, a.size()));
  return a;
}

SpMatC radial_matrix(double h, int n) {
  return assemble_L(GaugeChart(make_model("radial_well")), h, 10 * std::sqrt(h), n).matrix;
}

}  // namespace

TEST_CASE("dense spectrum of a diagonal matrix") {
  MatC D = MatC::Zero(3, 3);
  D(0, 0) = 1.0;
  D(1, 1) = 2.0;
  D(2, 2) = 3.0;
  SpectrumResult r = dense_spectrum(D);
  sort_by_distance(r, 0.0);
  REQUIRE(r.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(r.eigenvalues[k] == cplx(k + 1.0));
    CHECK(r.residuals[k] == 0.0);
  }
  CHECK(r.cluster_count() == 3);
}

TEST_CASE("Jordan block is flagged defective") {
  MatC J = MatC::Zero(2, 2);
  J(0, 1) = 1.0;
  SpectrumResult r = dense_spectrum(J);
  REQUIRE(r.size() == 2);
  CHECK(std::abs(r.eigenvalues[0]) <= 1e-14);
  CHECK(std::abs(r.eigenvalues[1]) <= 1e-14);
  REQUIRE(r.cluster_count() == 1);
  CHECK(r.cluster_ids[0] == r.cluster_ids[1]);
  CHECK(r.cluster_defective[0]);
}

TEST_CASE("distinct eigenvalues are not flagged") {
  MatC A = random_matrix(20, 5);
  SpectrumResult r = dense_spectrum(A);
  CHECK(r.cluster_count() == 20);
  for (bool d : r.cluster_defective) CHECK_FALSE(d);
}

TEST_CASE("shift-invert agrees with the dense path") {
  for (unsigned seed : {1u, 2u, 3u}) {
    MatC A = random_matrix(100, seed);
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<double> u(-5, 5);
    const cplx shift(u(rng), u(rng));
    auto dense = nearest(dense_spectrum(A).eigenvalues, shift, 6);
    SpectrumResult it = shift_invert_spectrum(sparse_of(A), shift, 6);
    REQUIRE(it.size() == 6);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(it.eigenvalues[k] - dense[k]) <= 1e-9);
  }
}

TEST_CASE("sparse diagonal, shift 0.11") {
  std::vector<double> d;
  for (int k = 1; k <= 50; ++k) d.push_back(0.1 * k);
  SpectrumResult r = shift_invert_spectrum(sparse_diag(d), 0.11, 2);
  REQUIRE(r.size() == 2);
  CHECK(std::abs(r.eigenvalues[0] - 0.1) <= 1e-12);
  CHECK(std::abs(r.eigenvalues[1] - 0.2) <= 1e-12);
  CHECK(r.meta.converged);
  CHECK(r.meta.reshifts == 0);
}

TEST_CASE("singular shift is perturbed and logged") {
  std::vector<double> d;
  for (int k = 1; k <= 30; ++k) d.push_back(0.1 * k);
  ArnoldiOptions opt;
  opt.reshift = cplx(0.0, 1e-3);
  SpectrumResult r = shift_invert_spectrum(sparse_diag(d), d[0], 2, opt);
  CHECK(r.meta.reshifts >= 1);
  CHECK_FALSE(r.meta.notes.empty());
  REQUIRE(r.size() == 2);
  CHECK(std::abs(r.eigenvalues[0] - d[0]) <= 1e-12);
}

TEST_CASE("uncertified Ritz values are dropped and the result is marked partial") {
  ArnoldiOptions opt;
  opt.tol = 0.0;
  opt.max_restarts = 0;
  SpectrumResult r = shift_invert_spectrum(sparse_of(random_matrix(60, 9)), cplx(0.3, 0.1), 4, opt);
  CHECK_FALSE(r.meta.converged);
  CHECK_FALSE(r.meta.notes.empty());
  for (double res : r.residuals) CHECK(res <= 0.0);
}

TEST_CASE("reported residuals respect the tolerance") {
  SpMatC M = sparse_of(random_matrix(200, 17));
  for (double tol : {1e-8, 1e-10}) {
    ArnoldiOptions opt;
    opt.tol = tol;
    SpectrumResult r = shift_invert_spectrum(M, cplx(1.0, -2.0), 8, opt);
    REQUIRE(r.size() > 0);
    CHECK(r.max_residual() <= tol);
  }
}

TEST_CASE("Landau cluster at h") {
  DirectOperator op = assemble_L(GaugeChart(make_model("landau")), 0.1, 6.0, 192);
  SpectrumResult r = shift_invert_spectrum(op.matrix, 0.1, 4);
  int close = 0;
  for (cplx e : r.eigenvalues) close += std::abs(e - 0.1) <= 1e-3 * 0.1;
  CHECK(close >= 2);
}

TEST_CASE("radial window is certified") {
  const double h = 0.05;
  SpectrumResult r = shift_invert_spectrum(radial_matrix(h, 119), h, 6);
  SpectrumResult in = filter_disc(r, h, 6 * h * h);
  CHECK(in.size() >= 3);
  CHECK(r.max_residual() <= 1e-8);
}

TEST_CASE("radial spectrum on a coarse grid matches the dense path") {
  const double h = 0.05;
  SpMatC M = radial_matrix(h, 29);
  auto dense = nearest(dense_spectrum(MatC(M)).eigenvalues, h, 6);
  SpectrumResult it = shift_invert_spectrum(M, h, 6);
  REQUIRE(it.size() == 6);
  for (int k = 0; k < 6; ++k) CHECK(std::abs(it.eigenvalues[k] - dense[k]) <= 1e-7);
}

TEST_CASE("window content does not depend on the shift") {
  const double h = 0.05, radius = 6 * h * h;
  SpMatC M = radial_matrix(h, 60);
  SpectrumResult a = filter_disc(shift_invert_spectrum(M, h, 6), h, radius);
  SpectrumResult b = filter_disc(shift_invert_spectrum(M, h + 0.3 * radius, 6), h, radius);
  REQUIRE(a.size() >= 3);
  REQUIRE(a.size() == b.size());
  sort_by_distance(a, 0.0);
  sort_by_distance(b, 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a.eigenvalues[k] - b.eigenvalues[k]) <= 1e-9);
}

TEST_CASE("disc filter and ordering") {
  SpectrumResult r;
  r.eigenvalues = {3.0, 1.0, cplx(0.0, 0.5), 2.0};
  r.residuals = {1e-12, 2e-12, 3e-12, 4e-12};
  assign_clusters(r, MatC(), 1e-9);
  SpectrumResult f = filter_disc(r, 0.0, 1.5);
  REQUIRE(f.size() == 2);
  CHECK(f.cluster_count() == 2);
  sort_by_distance(f, 0.0);
  CHECK(f.eigenvalues[0] == cplx(0.0, 0.5));
  CHECK(f.residuals[0] == 3e-12);
  CHECK(f.eigenvalues[1] == cplx(1.0));
}

TEST_CASE("matching identical lists") {
  std::vector<cplx> a{1.0, cplx(2.0, 1.0), 4.0};
  MatchReport m = match_spectra(a, a);
  REQUIRE(m.pairs.size() == 3);
  for (const MatchPair& p : m.pairs) CHECK(p.i == p.j);
  CHECK(m.max_err == 0.0);
  CHECK_FALSE(m.ambiguous);
}

TEST_CASE("matching {1, 3} with {1.01, 2.99}") {
  MatchReport m = match_spectra({1.0, 3.0}, {2.99, 1.01});
  REQUIRE(m.pairs.size() == 2);
  for (const MatchPair& p : m.pairs) CHECK(p.j == 1 - p.i);
  CHECK(m.max_err == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(m.mean_err == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_FALSE(m.ambiguous);
}

TEST_CASE("matching reports leftovers and ambiguity") {
  MatchReport m = match_spectra({1.0, 2.0, 3.0}, {2.05});
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].i == 1);
  CHECK(m.unmatched_a.size() == 2);
  CHECK(m.unmatched_b.empty());

  MatchReport amb = match_spectra({0.0, 1.0}, {0.5, cplx(0.5, 1e-3)});
  CHECK(amb.ambiguous);

  MatchReport none = match_spectra({}, {1.0});
  CHECK(none.pairs.empty());
  CHECK(none.unmatched_b.size() == 1);
}

TEST_CASE("resolvent norm equals the inverse smallest singular value") {
  for (unsigned seed : {4u, 5u}) {
    MatC A = random_matrix(60, seed);
    const cplx z(0.7, -0.4);
    MatC S = z * MatC::Identity(60, 60) - A;
    Eigen::JacobiSVD<MatC> svd(S);
    const double expect = 1.0 / svd.singularValues().minCoeff();
    CHECK(std::abs(resolvent_norm(A, z) / expect - 1.0) <= 1e-9);
  }
  MatC D = MatC::Zero(3, 3);
  D(0, 0) = 1.0;
  D(1, 1) = 2.0;
  D(2, 2) = 4.0;
  CHECK(resolvent_norm(D, 1.5) == doctest::Approx(2.0).epsilon(1e-12));
}
