#pragma once

#include <functional>
#include <string>
#include <vector>

#include "magspec/eigensolve.hpp"
#include "magspec/fields.hpp"
#include "magspec/types.hpp"

namespace magspec {

// Dirichlet box [-L, L]^2 with n interior points per axis. Node (i, j) sits
// at (-L + (i+1) d, -L + (j+1) d) and has index i n + j.
struct MagneticGrid {
  double L = 0.0, d = 0.0, h = 0.0;
  int n = 0;
  // theta(i, j) = d A2(q1_i, q2_j + d/2) / h on the q2 edge (i,j)-(i,j+1);
  // U2 = exp(i theta), U1 = 1.
  std::vector<double> theta;
  std::vector<cplx> V;

  double coord(int i) const { return -L + (i + 1) * d; }
  int index(int i, int j) const { return i * n + j; }
  double edge_theta(int i, int j) const { return theta[static_cast<std::size_t>(i) * (n - 1) + j]; }
  // Clockwise product U2(i,j) U1(i,j+1) conj(U2(i+1,j)) conj(U1(i,j)).
  cplx plaquette(int i, int j) const;
};

struct DirectOptions {
  // Added to A2 before forming link phases, e.g. d2 chi for a gauge shift.
  std::function<double(const Point&)> extra_A2;
};

struct DirectOperator {
  MagneticGrid grid;
  SpMatC matrix;
  std::vector<std::string> advisories;
};

DirectOperator assemble_L(const GaugeChart& chart, double h, double L, int n, const DirectOptions& opt = {});

struct Window {
  cplx shift;
  double radius;
  double report_radius;
};

Window spectral_window(const WellData& well, double h, double C, double Cprime);

// Value at d = 0 of the interpolating polynomial in d^2.
cplx richardson(const std::vector<double>& d, const std::vector<cplx>& values);

struct DirectParams {
  double box_factor = 10.0;                     // L = box_factor sqrt(h)
  std::vector<double> points_per_length{6, 9, 12};  // d ~ sqrt(h) / k
  int k = 8;
  double tol = 1e-8;
};

struct DirectLevel {
  int n = 0;
  double d = 0.0;
  SpectrumResult spectrum;
};

struct DirectRun {
  SpectrumResult extrapolated;          // inside the reporting disc
  std::vector<double> richardson_delta;  // |extrapolated - finest level|
  std::vector<double> extrapolation_error;  // |extrapolated - extrapolated without the coarsest level|
  std::vector<DirectLevel> levels;
  double L = 0.0;
};

DirectRun direct_extrapolated(const GaugeChart& chart, const WellData& well, double h, const Window& win,
                              const DirectParams& p = {});

void export_triplets(const SpMatC& M, const std::string& path);

}  // namespace magspec
