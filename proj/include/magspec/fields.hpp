#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "magspec/quadratic_model.hpp"
#include "magspec/types.hpp"

namespace magspec {

// Derivative jets. Index 1 is q1, index 2 is q2. d222 is the third q2
// derivative, the only third-order term the gauge chart needs.
struct RealJet {
  double v = 0, d1 = 0, d2 = 0, d11 = 0, d12 = 0, d22 = 0, d222 = 0;
};

struct ComplexJet {
  cplx v{}, d1{}, d2{}, d11{}, d12{}, d22{};
};

struct FieldModel {
  std::string name;
  std::function<double(const Point&)> B;
  std::function<cplx(const Point&)> V;
  // Optional analytic jets; finite differences are used when empty.
  std::function<RealJet(const Point&)> B_jet;
  std::function<ComplexJet(const Point&)> V_jet;
  double b0 = 0.0;
  double u = 1.0;
  double v = 0.0;
  bool V_real = false;  // set when Im V vanishes identically
};

struct Rect {
  double x0, x1, y0, y1;
  bool contains(const Point& p) const { return p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1; }
};

RealJet B_jet_fd(const FieldModel& m, const Point& q);
ComplexJet V_jet_fd(const FieldModel& m, const Point& q);
RealJet eval_B_jet(const FieldModel& m, const Point& q);
ComplexJet eval_V_jet(const FieldModel& m, const Point& q);

struct ValidationReport {
  bool ok = true;
  double min_B = 0.0;
  double max_deriv_rel_err = 0.0;  // analytic vs finite differences; 0 if no analytic jets
  // Sampled sup norms on the box; a bounded-symbol check only (growth at
  // infinity is not observable on a finite box).
  double sup_grad_B = 0.0, sup_hess_B = 0.0, sup_abs_V = 0.0, sup_grad_V = 0.0, sup_alpha = 0.0;
  std::vector<std::string> messages;
};

ValidationReport validate_model(const FieldModel& m, const Rect& box, int grid_n = 41, std::uint64_t seed = 7);

// Adaptive Gauss-Kronrod on [a, b]; throws NoConvergence if the error
// estimate stays above abs_tol.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-10);

double gauge_A2(const FieldModel& m, const Point& q);

// Value, gradient and Hessian of a pulled-back symbol in (xi, x) coordinates.
template <class T>
struct HatJet {
  T v{};
  T d_xi{}, d_x{};
  T d_xixi{}, d_xix{}, d_xx{};
};

struct HatJets {
  HatJet<double> B;
  HatJet<double> alpha;
  HatJet<cplx> V;
};

// A = (0, A2) with A2 = int_0^{q1} B(s, q2) ds and phi(q) = (A2(q), q2).
class GaugeChart {
public:
  explicit GaugeChart(FieldModel model, double w_coeff = 0.25);

  const FieldModel& model() const { return model_; }
  double w_coeff() const { return w_coeff_; }

  double A2(const Point& q) const { return gauge_A2(model_, q); }
  double alpha(const Point& q) const;
  Point phi(const Point& q) const { return {A2(q), q[1]}; }
  Point phi_inv(const Point& X) const;

  double Bhat(const Point& X) const { return model_.B(phi_inv(X)); }
  cplx Vhat(const Point& X) const { return model_.V(phi_inv(X)); }
  cplx phat(const Point& X) const;
  double alphahat(const Point& X) const { return alpha(phi_inv(X)); }
  double W(const Point& X) const;

  HatJets hat_jets(const Point& X) const;

private:
  FieldModel model_;
  double w_coeff_;
};

double localizer_F(const FieldModel& m, const Point& q);

struct WellData {
  Point q0{};
  Point X0{};
  cplx mu0{};
  cplx c0{};
  Eigen::Matrix2cd hess_p_q;
  Eigen::Vector2cd grad_p_q;
  ComplexQuadratic Q0;  // half Hessian of p-hat at X0, x = x2, xi = xi2
  double min_F = 0.0;
  double boundary_min_F = 0.0;
  // Agreement of c0 with the q-coordinate formula; the identity holds only
  // where grad p vanishes, which it need not for complex potentials.
  double c0_identity_rel_err = 0.0;
  bool c0_identity_applicable = false;
};

struct WellOptions {
  double margin_frac = 0.1;
  double grad_tol = 1e-8;
};

WellData find_well(const GaugeChart& chart, const Rect& search_box, int grid_n, const WellOptions& opt = {});

// Fills c0 and Q0 of an otherwise complete WellData.
cplx compute_c0(WellData& well, const GaugeChart& chart);

}  // namespace magspec
