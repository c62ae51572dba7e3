#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "magspec/fields.hpp"
#include "magspec/models.hpp"

using namespace magspec;

namespace {

const Rect kBox{-3, 3, -3, 3};

Error::Kind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return Error::Kind::Advisory;
}

}  // namespace

TEST_CASE("gauge potential of a constant field is linear in q1") {
  FieldModel m = expression_model("2.5", "0", 2.5, 1, 0);
  CHECK(gauge_A2(m, {1.3, -0.4}) == doctest::Approx(2.5 * 1.3).epsilon(1e-14));
  CHECK(gauge_A2(m, {-0.7, 2.0}) == doctest::Approx(-2.5 * 0.7).epsilon(1e-14));
}

TEST_CASE("gauge potential of the radial well at (1, 0)") {
  FieldModel m = make_model("radial_well");
  const double expected = 2.0 - std::sqrt(M_PI) / 2.0 * std::erf(1.0);
  CHECK(std::abs(gauge_A2(m, {1.0, 0.0}) - expected) <= 1e-10);
  CHECK(std::abs(expected - 1.25318) < 1e-5);
}

TEST_CASE("gauge potential vanishes on the q2 axis") {
  FieldModel m = make_model("radial_well");
  CHECK(gauge_A2(m, {0.0, 0.8}) == 0.0);
}

TEST_CASE("q1 derivative of the gauge potential is B") {
  FieldModel m = make_model("radial_well");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  const double s = 1e-3;
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    Point q{u(rng), u(rng)};
    auto A = [&](double t) { return gauge_A2(m, {q[0] + t, q[1]}); };
    double d = (-A(2 * s) + 8 * A(s) - 8 * A(-s) + A(-2 * s)) / (12 * s);
    worst = std::max(worst, std::abs(d - m.B(q)));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("chart of a unit field is the identity") {
  GaugeChart chart(make_model("landau"));
  Point X = chart.phi({0.4, -1.2});
  CHECK(X[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(X[1] == -1.2);
  Point q = chart.phi_inv({0.4, -1.2});
  CHECK(q[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(q[1] == -1.2);
}

TEST_CASE("chart round trips") {
  GaugeChart chart(make_model("radial_well"));
  Point q = chart.phi_inv(chart.phi({0.7, -0.3}));
  CHECK(norm_inf({q[0] - 0.7, q[1] + 0.3}) <= 1e-10);
  Point X = chart.phi({1.0, 0.0});
  CHECK(std::abs(X[0] - (2.0 - std::sqrt(M_PI) / 2.0 * std::erf(1.0))) <= 1e-10);
  CHECK(X[1] == 0.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  double e1 = 0, e2 = 0;
  for (int k = 0; k < 200; ++k) {
    Point p{u(rng), u(rng)};
    Point a = chart.phi_inv(chart.phi(p));
    Point b = chart.phi(chart.phi_inv(p));
    e1 = std::max(e1, norm_inf({a[0] - p[0], a[1] - p[1]}));
    e2 = std::max(e2, norm_inf({b[0] - p[0], b[1] - p[1]}));
  }
  CHECK(e1 <= 1e-10);
  CHECK(e2 <= 1e-10);
}

TEST_CASE("pulled-back field reproduces B") {
  GaugeChart chart(make_model("radial_well(0.3,-0.2)"));
  for (Point q : {Point{0.1, 0.2}, Point{-1.4, 0.9}, Point{2.2, -2.0}})
    CHECK(std::abs(chart.Bhat(chart.phi(q)) - chart.model().B(q)) <= 1e-10);
}

TEST_CASE("alpha is the q2 derivative of the gauge potential") {
  GaugeChart chart(make_model("radial_well(0.3,-0.2)"));
  const double s = 1e-3;
  for (Point q : {Point{0.5, 0.4}, Point{-1.1, -0.6}, Point{1.7, 1.2}}) {
    auto A = [&](double t) { return chart.A2({q[0], q[1] + t}); };
    double d = (-A(2 * s) + 8 * A(s) - 8 * A(-s) + A(-2 * s)) / (12 * s);
    CHECK(std::abs(chart.alpha(q) - d) <= 1e-9);
  }
}

TEST_CASE("localizer combinations") {
  FieldModel r = make_model("radial_well");
  for (Point q : {Point{0.2, 0.1}, Point{1.0, -2.0}}) CHECK(localizer_F(r, q) == r.B(q));

  FieldModel im = make_model("imaginary_well");  // B + Re V = 1
  for (Point q : {Point{0.2, 0.1}, Point{1.0, -2.0}}) CHECK(localizer_F(im, q) == doctest::Approx(1.0 + im.V(q).imag()));

  FieldModel two = expression_model("1 - 0.5*exp(-(q1-2)^2-q2^2)", "i*0.3*exp(-(q1+2)^2-q2^2)", 0.4, 1.0, -1.0);
  for (Point q : {Point{2.0, 0.0}, Point{-2.0, 0.0}, Point{0.0, 0.5}}) {
    double w = 0.5 * std::exp(-(q[0] - 2) * (q[0] - 2) - q[1] * q[1]);
    double vt = 0.3 * std::exp(-(q[0] + 2) * (q[0] + 2) - q[1] * q[1]);
    CHECK(localizer_F(two, q) == doctest::Approx(1.0 - w - vt).epsilon(1e-14));
  }
}

TEST_CASE("well of the radial model") {
  GaugeChart chart(make_model("radial_well"));
  WellData w = find_well(chart, kBox, 81);
  CHECK(norm_inf(w.q0) <= 1e-9);
  CHECK(std::abs(w.mu0 - 1.0) <= 1e-12);
  CHECK(std::abs(w.c0 - 1.0) <= 1e-8);
  CHECK(w.c0_identity_applicable);
  CHECK(w.c0_identity_rel_err <= 1e-6);
  // u Re mu0 + v Im mu0 equals min F.
  CHECK(std::abs(w.mu0.real() - w.min_F) <= 1e-12);
}

TEST_CASE("well follows a translated field") {
  GaugeChart chart(make_model("radial_well(0.4,-0.7)"));
  WellData w = find_well(chart, kBox, 81);
  CHECK(std::abs(w.q0[0] - 0.4) <= 1e-8);
  CHECK(std::abs(w.q0[1] + 0.7) <= 1e-8);
  WellData w0 = find_well(GaugeChart(make_model("radial_well")), kBox, 81);
  CHECK(std::abs(w.c0 - w0.c0) <= 1e-8);
}

TEST_CASE("imaginary well has c0 = i") {
  GaugeChart chart(make_model("imaginary_well"));
  WellData w = find_well(chart, kBox, 81);
  CHECK(std::abs(w.c0 - I) <= 1e-8);
  CHECK(std::abs(w.mu0 - 1.0) <= 1e-12);
  CHECK(w.c0_identity_rel_err <= 1e-6);
  const FieldModel& m = chart.model();
  CHECK(std::abs(m.u * w.mu0.real() + m.v * w.mu0.imag() - w.min_F) <= 1e-10);
}

TEST_CASE("selfadjoint wells have real positive c0") {
  for (const char* key : {"radial_well", "radial_well(0.5,0.5)"}) {
    WellData w = find_well(GaugeChart(make_model(key)), kBox, 81);
    CHECK(std::abs(w.c0.imag()) <= 1e-12);
    CHECK(w.c0.real() > 0);
  }
  FieldModel e = expression_model("1 + q1^2 + 0.5*q2^2 + 0.3*q1*q2", "0.2*q1^2", 0.5, 1, 0, {-2, 2, -2, 2});
  WellData w = find_well(GaugeChart(e), {-2, 2, -2, 2}, 61);
  CHECK(std::abs(w.c0.imag()) <= 1e-10);
  CHECK(w.c0.real() > 0);
  CHECK(w.c0_identity_rel_err <= 1e-6);
}

TEST_CASE("flat field is rejected as degenerate") {
  GaugeChart chart(make_model("landau"));
  CHECK(kind_of([&] { find_well(chart, kBox, 41); }) == Error::Kind::Degenerate);
}

TEST_CASE("boundary minimum is rejected") {
  FieldModel m = expression_model("2 + 0.1*q1", "0", 1.0, 1, 0);
  CHECK(kind_of([&] { find_well(GaugeChart(m), kBox, 41); }) == Error::Kind::InvalidModel);
}

TEST_CASE("two separated wells are rejected") {
  FieldModel m = expression_model("2 - exp(-(q1-1.5)^2-q2^2) - exp(-(q1+1.5)^2-q2^2)", "0", 0.5, 1, 0);
  CHECK(kind_of([&] { find_well(GaugeChart(m), kBox, 61); }) == Error::Kind::Ambiguous);
}

TEST_CASE("bundled models pass validation") {
  for (const char* key : {"landau", "radial_well", "imaginary_well", "perturbed_well(0.1)"}) {
    ValidationReport v = validate_model(make_model(key), kBox);
    CHECK_MESSAGE(v.ok, key);
    CHECK(v.max_deriv_rel_err <= 1e-6);
  }
}

TEST_CASE("validation catches a wrong lower bound and wrong derivatives") {
  FieldModel low = make_model("radial_well");
  low.b0 = 1.5;
  CHECK_FALSE(validate_model(low, kBox).ok);

  FieldModel bad = make_model("radial_well");
  bad.B_jet = [](const Point& q) {
    RealJet j;
    j.v = 2.0 - std::exp(-(q[0] * q[0] + q[1] * q[1]));
    j.d1 = 1.0;  // wrong on purpose
    return j;
  };
  ValidationReport v = validate_model(bad, kBox);
  CHECK_FALSE(v.ok);
  CHECK(v.max_deriv_rel_err > 1e-3);
}

TEST_CASE("finite-difference jets agree with analytic ones") {
  FieldModel m = make_model("perturbed_well(0.3)");
  for (Point q : {Point{0.3, 0.2}, Point{1.1, -0.4}}) {
    RealJet a = m.B_jet(q), f = B_jet_fd(m, q);
    CHECK(std::abs(a.d11 - f.d11) <= 1e-7);
    CHECK(std::abs(a.d222 - f.d222) <= 1e-6);
    ComplexJet va = m.V_jet(q), vf = V_jet_fd(m, q);
    CHECK(std::abs(va.d12 - vf.d12) <= 1e-7);
  }
}
