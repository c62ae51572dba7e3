#include "magspec/fields.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace magspec {

namespace {

// 4th-order central stencils. Steps scale with 1 + |q|.
constexpr double kStep12 = 1e-4;
constexpr double kStep3 = 2e-3;

template <class F>
auto d1_fd(const F& f, const Point& q, int axis, double s) {
  auto at = [&](double t) {
    Point p = q;
    p[axis] += t;
    return f(p);
  };
  return (-at(2 * s) + 8.0 * at(s) - 8.0 * at(-s) + at(-2 * s)) / (12.0 * s);
}

template <class F>
auto d2_fd(const F& f, const Point& q, int axis, double s) {
  auto at = [&](double t) {
    Point p = q;
    p[axis] += t;
    return f(p);
  };
  return (-at(2 * s) + 16.0 * at(s) - 30.0 * at(0.0) + 16.0 * at(-s) - at(-2 * s)) / (12.0 * s * s);
}

template <class F>
auto d3_fd(const F& f, const Point& q, int axis, double s) {
  auto at = [&](double t) {
    Point p = q;
    p[axis] += t;
    return f(p);
  };
  return (-at(3 * s) + 8.0 * at(2 * s) - 13.0 * at(s) + 13.0 * at(-s) - 8.0 * at(-2 * s) + at(-3 * s)) /
         (8.0 * s * s * s);
}

template <class F>
auto d12_fd(const F& f, const Point& q, double s) {
  static constexpr int off[4] = {-2, -1, 1, 2};
  static constexpr double w[4] = {1.0, -8.0, 8.0, -1.0};
  decltype(f(q)) acc{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) acc += (w[i] * w[j]) * f(Point{q[0] + off[i] * s, q[1] + off[j] * s});
  return acc / (144.0 * s * s);
}

double step_scale(const Point& q) { return 1.0 + std::hypot(q[0], q[1]); }

// q2 derivatives of B up to third order, the integrands of the alpha jet.
std::array<double, 3> B_q2_derivs(const FieldModel& m, const Point& q) {
  if (m.B_jet) {
    RealJet j = m.B_jet(q);
    return {j.d2, j.d22, j.d222};
  }
  double sc = step_scale(q);
  return {d1_fd(m.B, q, 1, kStep12 * sc), d2_fd(m.B, q, 1, kStep12 * sc), d3_fd(m.B, q, 1, kStep3 * sc)};
}

// Composite 20-point Gauss-Legendre on panels of length <= 0.5.
template <int K, class F>
std::array<double, K> integrate_gl(const F& f, double a, double b) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  static const auto& x = GL::abscissa();
  static const auto& w = GL::weights();
  std::array<double, K> acc{};
  if (a == b) return acc;
  int panels = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / 0.5)));
  double hp = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double mid = a + (p + 0.5) * hp, half = 0.5 * hp;
    for (std::size_t i = 0; i < x.size(); ++i) {
      // abscissa() holds the non-negative nodes; weights pair with them.
      std::array<double, 2> nodes{mid + half * x[i], mid - half * x[i]};
      int count = (x[i] == 0.0) ? 1 : 2;
      for (int s = 0; s < count; ++s) {
        std::array<double, K> v = f(nodes[s]);
        for (int k = 0; k < K; ++k) acc[k] += half * w[i] * v[k];
      }
    }
  }
  return acc;
}

}  // namespace

RealJet B_jet_fd(const FieldModel& m, const Point& q) {
  double s = kStep12 * step_scale(q);
  RealJet j;
  j.v = m.B(q);
  j.d1 = d1_fd(m.B, q, 0, s);
  j.d2 = d1_fd(m.B, q, 1, s);
  j.d11 = d2_fd(m.B, q, 0, s);
  j.d22 = d2_fd(m.B, q, 1, s);
  j.d12 = d12_fd(m.B, q, s);
  j.d222 = d3_fd(m.B, q, 1, kStep3 * step_scale(q));
  return j;
}

ComplexJet V_jet_fd(const FieldModel& m, const Point& q) {
  double s = kStep12 * step_scale(q);
  ComplexJet j;
  j.v = m.V(q);
  j.d1 = d1_fd(m.V, q, 0, s);
  j.d2 = d1_fd(m.V, q, 1, s);
  j.d11 = d2_fd(m.V, q, 0, s);
  j.d22 = d2_fd(m.V, q, 1, s);
  j.d12 = d12_fd(m.V, q, s);
  return j;
}

RealJet eval_B_jet(const FieldModel& m, const Point& q) { return m.B_jet ? m.B_jet(q) : B_jet_fd(m, q); }

ComplexJet eval_V_jet(const FieldModel& m, const Point& q) { return m.V_jet ? m.V_jet(q) : V_jet_fd(m, q); }

ValidationReport validate_model(const FieldModel& m, const Rect& box, int grid_n, std::uint64_t seed) {
  ValidationReport rep;
  auto fail = [&](const std::string& s) {
    rep.ok = false;
    rep.messages.push_back(s);
  };
  if (!m.B || !m.V) {
    fail("model is missing B or V");
    return rep;
  }
  if (!(m.u > 0)) fail("localizer coefficient u must be positive");
  if (!(m.b0 > 0)) fail("lower bound b0 must be positive");

  rep.min_B = INFINITY;
  for (int i = 0; i < grid_n; ++i)
    for (int k = 0; k < grid_n; ++k) {
      Point q{box.x0 + (box.x1 - box.x0) * i / (grid_n - 1), box.y0 + (box.y1 - box.y0) * k / (grid_n - 1)};
      double b = m.B(q);
      rep.min_B = std::min(rep.min_B, b);
      RealJet bj = eval_B_jet(m, q);
      ComplexJet vj = eval_V_jet(m, q);
      rep.sup_grad_B = std::max(rep.sup_grad_B, std::hypot(bj.d1, bj.d2));
      rep.sup_hess_B = std::max({rep.sup_hess_B, std::abs(bj.d11), std::abs(bj.d12), std::abs(bj.d22)});
      rep.sup_abs_V = std::max(rep.sup_abs_V, std::abs(vj.v));
      rep.sup_grad_V = std::max(rep.sup_grad_V, std::hypot(std::abs(vj.d1), std::abs(vj.d2)));
    }
  if (rep.min_B < m.b0) {
    std::ostringstream os;
    os << "B drops to " << rep.min_B << " below the witness b0 = " << m.b0;
    fail(os.str());
  }
  if (!rep.ok) return rep;
  GaugeChart chart(m);
  for (double x : {box.x0, box.x1})
    for (int k = 0; k < grid_n; k += std::max(1, grid_n / 8)) {
      Point q{x, box.y0 + (box.y1 - box.y0) * k / (grid_n - 1)};
      rep.sup_alpha = std::max(rep.sup_alpha, std::abs(chart.alpha(q)));
    }

  if (m.B_jet || m.V_jet) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(box.x0, box.x1), uy(box.y0, box.y1);
    // Errors are measured against the size of the whole jet, value included,
    // since tiny derivatives of an O(1) function are not resolvable by differencing.
    auto rel = [](auto a, auto b, double scale) { return std::abs(a - b) / std::max(scale, 1e-3); };
    for (int s = 0; s < 100; ++s) {
      Point q{ux(rng), uy(rng)};
      if (m.B_jet) {
        RealJet a = m.B_jet(q), f = B_jet_fd(m, q);
        double sc = std::max({std::abs(a.v), std::abs(a.d1), std::abs(a.d2), std::abs(a.d11), std::abs(a.d12), std::abs(a.d22)});
        for (auto [x, y] : {std::pair{a.d1, f.d1}, {a.d2, f.d2}, {a.d11, f.d11}, {a.d12, f.d12}, {a.d22, f.d22}})
          rep.max_deriv_rel_err = std::max(rep.max_deriv_rel_err, rel(x, y, sc));
        rep.max_deriv_rel_err = std::max(rep.max_deriv_rel_err, rel(a.d222, f.d222, std::max(sc, std::abs(a.d222))));
      }
      if (m.V_jet) {
        ComplexJet a = m.V_jet(q), f = V_jet_fd(m, q);
        double sc = std::max({std::abs(a.v), std::abs(a.d1), std::abs(a.d2), std::abs(a.d11), std::abs(a.d12), std::abs(a.d22)});
        for (auto [x, y] : {std::pair{a.d1, f.d1}, {a.d2, f.d2}, {a.d11, f.d11}, {a.d12, f.d12}, {a.d22, f.d22}})
          rep.max_deriv_rel_err = std::max(rep.max_deriv_rel_err, rel(x, y, sc));
      }
    }
    if (rep.max_deriv_rel_err > 1e-6) {
      std::ostringstream os;
      os << "analytic derivatives disagree with finite differences (rel " << rep.max_deriv_rel_err << ")";
      fail(os.str());
    }
  }
  rep.messages.push_back("symbol-class check is heuristic: bounded derivatives on the sampled box only");
  return rep;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0, L1 = 0.0;
  // One panel settles short or smooth intervals; a relative tolerance alone
  // would recurse to full depth on intervals whose integral is near zero.
  double val = GK::integrate(f, a, b, 0, 0.0, &err, &L1);
  if (err <= 1e-3 * abs_tol) return val;
  const double rel = std::max(1e-15, 1e-2 * abs_tol / std::max(L1, 1e-300));
  val = GK::integrate(f, a, b, 15, rel, &err);
  if (!(err <= abs_tol)) {
    std::ostringstream os;
    os << "quadrature did not reach " << abs_tol << " on [" << a << ", " << b << "], error estimate " << err;
    throw Error(Error::Kind::NoConvergence, os.str());
  }
  return val;
}

double gauge_A2(const FieldModel& m, const Point& q) {
  double q2 = q[1];
  return integrate_adaptive([&](double s) { return m.B(Point{s, q2}); }, 0.0, q[0]);
}

GaugeChart::GaugeChart(FieldModel model, double w_coeff) : model_(std::move(model)), w_coeff_(w_coeff) {
  if (!model_.B || !model_.V) throw Error(Error::Kind::InvalidModel, "model is missing B or V");
  if (!(model_.b0 > 0)) throw Error(Error::Kind::InvalidModel, "b0 must be positive");
}

double GaugeChart::alpha(const Point& q) const {
  double q2 = q[1];
  auto r = integrate_gl<1>([&](double s) { return std::array<double, 1>{B_q2_derivs(model_, {s, q2})[0]}; }, 0.0,
                           q[0]);
  return r[0];
}

Point GaugeChart::phi_inv(const Point& X) const {
  const double xi = X[0], x = X[1];
  // |A2(q1)| >= b0 |q1| brackets the root.
  double lo = -std::abs(xi) / model_.b0 - 1e-12, hi = std::abs(xi) / model_.b0 + 1e-12;
  double q1 = xi / model_.B(Point{0.0, x});
  q1 = std::clamp(q1, lo, hi);
  double A = gauge_A2(model_, {q1, x});
  for (int it = 0; it < 200; ++it) {
    double r = A - xi;
    if (std::abs(r) <= 1e-12 * std::max(1.0, std::abs(xi))) return {q1, x};
    if (r > 0)
      hi = q1;
    else
      lo = q1;
    double next = q1 - r / model_.B(Point{q1, x});
    bool newton = it < 60 && next > lo && next < hi;
    if (!newton) next = 0.5 * (lo + hi);
    // Incremental quadrature from the previous iterate.
    A += integrate_adaptive([&](double s) { return model_.B(Point{s, x}); }, q1, next);
    q1 = next;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(q1))) break;
  }
  double r = gauge_A2(model_, {q1, x}) - xi;
  if (std::abs(r) > 1e-10) {
    std::ostringstream os;
    os << "diffeomorphism inverse failed at (" << xi << ", " << x << "), residual " << r;
    throw Error(Error::Kind::InvalidModel, os.str());
  }
  return {q1, x};
}

cplx GaugeChart::phat(const Point& X) const {
  Point q = phi_inv(X);
  return model_.B(q) + model_.V(q);
}

double GaugeChart::W(const Point& X) const {
  HatJets j = hat_jets(X);
  return w_coeff_ * (j.B.d_xi * j.B.d_xi + j.alpha.d_xi * j.alpha.d_xi);
}

namespace {

// Chain rule for f-hat = f o phi^{-1}, with D_xi = (1/B) d1 and
// D_x = d2 - (alpha/B) d1.
template <class T>
HatJet<T> pull_back(T v, T f1, T f2, T f11, T f12, T f22, const RealJet& B, double a, double a1, double a2) {
  const double b = B.v, b1 = B.d1, b2 = B.d2, ab = a / b;
  HatJet<T> out;
  out.v = v;
  out.d_xi = f1 / b;
  out.d_x = f2 - ab * f1;
  out.d_xixi = f11 / (b * b) - f1 * b1 / (b * b * b);
  out.d_xix = (f12 / b - f1 * b2 / (b * b)) - ab * (f11 / b - f1 * b1 / (b * b));
  const double r1 = a1 / b - a * b1 / (b * b), r2 = a2 / b - a * b2 / (b * b);
  out.d_xx = (f22 - r2 * f1 - ab * f12) - ab * (f12 - r1 * f1 - ab * f11);
  return out;
}

}  // namespace

HatJets GaugeChart::hat_jets(const Point& X) const {
  Point q = phi_inv(X);
  RealJet B = eval_B_jet(model_, q);
  ComplexJet V = eval_V_jet(model_, q);
  const double q2 = q[1];
  auto ints = integrate_gl<3>([&](double s) { return B_q2_derivs(model_, {s, q2}); }, 0.0, q[0]);
  // alpha = int d2 B, d1 alpha = d2 B, d2 alpha = int d22 B,
  // d11 alpha = d12 B, d12 alpha = d22 B, d22 alpha = int d222 B.
  const double a = ints[0], a1 = B.d2, a2 = ints[1];
  const double a11 = B.d12, a12 = B.d22, a22 = ints[2];
  HatJets out;
  out.B = pull_back<double>(B.v, B.d1, B.d2, B.d11, B.d12, B.d22, B, a, a1, a2);
  out.alpha = pull_back<double>(a, a1, a2, a11, a12, a22, B, a, a1, a2);
  out.V = pull_back<cplx>(V.v, V.d1, V.d2, V.d11, V.d12, V.d22, B, a, a1, a2);
  return out;
}

double localizer_F(const FieldModel& m, const Point& q) {
  cplx V = m.V(q);
  return m.u * (m.B(q) + V.real()) + m.v * V.imag();
}

namespace {

struct FJet {
  double v;
  Eigen::Vector2d g;
  Eigen::Matrix2d H;
};

FJet localizer_jet(const FieldModel& m, const Point& q) {
  RealJet B = eval_B_jet(m, q);
  ComplexJet V = eval_V_jet(m, q);
  auto comb = [&](double b, cplx v) { return m.u * (b + v.real()) + m.v * v.imag(); };
  FJet j;
  j.v = comb(B.v, V.v);
  j.g << comb(B.d1, V.d1), comb(B.d2, V.d2);
  j.H << comb(B.d11, V.d11), comb(B.d12, V.d12), comb(B.d12, V.d12), comb(B.d22, V.d22);
  return j;
}

}  // namespace

WellData find_well(const GaugeChart& chart, const Rect& box, int grid_n, const WellOptions& opt) {
  const FieldModel& m = chart.model();
  if (grid_n < 5) throw Error(Error::Kind::InvalidInput, "find_well needs grid_n >= 5");
  std::vector<double> F(static_cast<std::size_t>(grid_n) * grid_n);
  auto node = [&](int i, int k) {
    return Point{box.x0 + (box.x1 - box.x0) * i / (grid_n - 1), box.y0 + (box.y1 - box.y0) * k / (grid_n - 1)};
  };
  auto at = [&](int i, int k) -> double& { return F[static_cast<std::size_t>(i) * grid_n + k]; };
  int imin = 0, kmin = 0;
  double bmin = INFINITY;
  for (int i = 0; i < grid_n; ++i)
    for (int k = 0; k < grid_n; ++k) {
      at(i, k) = localizer_F(m, node(i, k));
      if (at(i, k) < at(imin, kmin)) imin = i, kmin = k;
      if (i == 0 || k == 0 || i == grid_n - 1 || k == grid_n - 1) bmin = std::min(bmin, at(i, k));
    }
  const double fmin = at(imin, kmin);
  const double fmax = *std::max_element(F.begin(), F.end());
  if (fmax - fmin <= 1e-12 * (1.0 + std::abs(fmin)))
    throw Error(Error::Kind::Degenerate, "F is constant on the search box: minimum not isolated");
  if (bmin - fmin <= 1e-12 * (1.0 + std::abs(fmin)) || imin == 0 || kmin == 0 || imin == grid_n - 1 || kmin == grid_n - 1)
    throw Error(Error::Kind::InvalidModel, "minimum attained on the search-box boundary: minimum possibly at infinity");

  // Sublevel set below the margin must be a single 4-connected cluster.
  const double level = fmin + opt.margin_frac * (bmin - fmin);
  std::vector<char> seen(F.size(), 0);
  auto flood = [&](int i0, int k0) {
    std::queue<std::pair<int, int>> qu;
    qu.push({i0, k0});
    seen[static_cast<std::size_t>(i0) * grid_n + k0] = 1;
    while (!qu.empty()) {
      auto [i, k] = qu.front();
      qu.pop();
      for (auto [di, dk] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        int a = i + di, b = k + dk;
        if (a < 0 || b < 0 || a >= grid_n || b >= grid_n) continue;
        std::size_t id = static_cast<std::size_t>(a) * grid_n + b;
        if (seen[id] || at(a, b) > level) continue;
        seen[id] = 1;
        qu.push({a, b});
      }
    }
  };
  flood(imin, kmin);
  for (int i = 0; i < grid_n; ++i)
    for (int k = 0; k < grid_n; ++k)
      if (at(i, k) <= level && !seen[static_cast<std::size_t>(i) * grid_n + k])
        throw Error(Error::Kind::Ambiguous, "two disjoint sublevel clusters of F: non-unique minimum");

  // Damped Newton from the best grid node.
  Point q = node(imin, kmin);
  FJet j = localizer_jet(m, q);
  for (int it = 0; it < 100 && j.g.norm() > 1e-12; ++it) {
    Eigen::Vector2d step;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(j.H);
    if (es.eigenvalues().minCoeff() > 0)
      step = -j.H.ldlt().solve(j.g);
    else
      step = -j.g;
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40 && !accepted; ++ls, t *= 0.5) {
      Point qn{q[0] + t * step(0), q[1] + t * step(1)};
      FJet trial = localizer_jet(m, qn);
      if (trial.v <= j.v + 1e-14 * (1.0 + std::abs(j.v)) || trial.g.norm() < j.g.norm()) {
        q = qn;
        j = trial;
        accepted = true;
      }
    }
    if (!accepted) break;
  }
  if (j.g.norm() > opt.grad_tol) {
    std::ostringstream os;
    os << "Newton refinement of the localizer stalled, |grad F| = " << j.g.norm();
    throw Error(Error::Kind::NoConvergence, os.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(j.H);
  if (es.eigenvalues().minCoeff() <= 0)
    throw Error(Error::Kind::Degenerate, "Hessian of F at the minimum is not positive definite");

  WellData w;
  w.q0 = q;
  w.X0 = chart.phi(q);
  w.mu0 = m.B(q) + m.V(q);
  w.min_F = j.v;
  w.boundary_min_F = bmin;
  RealJet B = eval_B_jet(m, q);
  ComplexJet V = eval_V_jet(m, q);
  w.hess_p_q << B.d11 + V.d11, B.d12 + V.d12, B.d12 + V.d12, B.d22 + V.d22;
  w.grad_p_q << B.d1 + V.d1, B.d2 + V.d2;
  compute_c0(w, chart);
  return w;
}

cplx compute_c0(WellData& w, const GaugeChart& chart) {
  const FieldModel& m = chart.model();
  HatJets j = chart.hat_jets(w.X0);
  // p-hat(xi, x) with x the position and xi the momentum of the slow variable.
  cplx pxx = j.B.d_xx + j.V.d_xx, pxix = j.B.d_xix + j.V.d_xix, pxixi = j.B.d_xixi + j.V.d_xixi;
  cplx omega = cplx(m.u, -m.v) / std::hypot(m.u, m.v);
  cplx det = 0.25 * (pxx * pxixi - pxix * pxix);
  double scale = 0.5 * (std::abs(pxx) + std::abs(pxixi));
  if (!(std::abs(det) > 1e-12 * std::max(scale * scale, 1e-300)) || scale == 0.0)
    throw Error(Error::Kind::Degenerate, "degenerate well: zero Hessian determinant, fine-structure hypotheses fail");
  w.Q0 = make_quadratic(0.5 * pxx, 0.5 * pxix, 0.5 * pxixi, omega);
  w.c0 = cone_sqrt(w.Q0);

  // q-coordinate cross-check: B(q0)^{-1} sqrt(det(1/2 Hess_q p)).
  cplx dq = 0.25 * w.hess_p_q.determinant();
  cplx alt = std::sqrt(dq) / m.B(w.q0);
  if (std::abs(alt + w.c0) < std::abs(alt - w.c0)) alt = -alt;
  w.c0_identity_rel_err = std::abs(alt - w.c0) / std::abs(w.c0);
  w.c0_identity_applicable = w.grad_p_q.norm() <= 1e-6;
  if (w.c0_identity_applicable && w.c0_identity_rel_err > 1e-6) {
    std::ostringstream os;
    os << "c0 chain-rule identity violated: " << w.c0 << " vs " << alt;
    throw Error(Error::Kind::NoConvergence, os.str());
  }
  return w.c0;
}

}  // namespace magspec
