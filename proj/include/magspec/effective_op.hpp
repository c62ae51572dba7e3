#pragma once

#include <functional>
#include <string>
#include <vector>

#include "magspec/eigensolve.hpp"
#include "magspec/fields.hpp"
#include "magspec/types.hpp"

namespace magspec {

struct EffectiveOptions {
  bool with_mu1 = true;
  bool local_z = false;         // z = Bhat + Vhat at each point instead of mu0
  double window_factor = 9.0;   // physical window half-width W = window_factor sqrt(h)
  double box_factor = 1.6;      // periodic box half-width L = box_factor W
  double blend_width = 0.25;    // smoothstep from W to (1 + blend_width) W
  double cache_extent = 1.3;    // mu1 table covers X0 +- cache_extent W
  int cache_n = 49;
  int mu1_N = 64;
  double C = 6.0;               // plateau sits at min F + 4 C h
  int threads = 1;
};

// mu_eff(x, xi) = p-hat(xi, x) + h mu1(x, xi) inside the window, blended
// to a constant plateau outside. x is the position, xi the momentum.
class EffectiveSymbol {
public:
  EffectiveSymbol(GaugeChart chart, WellData well, double h, EffectiveOptions opt = {});

  cplx operator()(double x, double xi) const;
  cplx principal(double x, double xi) const;
  cplx mu1_cached(double x, double xi) const;
  cplx mu1_direct(double x, double xi) const;
  double blend_weight(double x, double xi) const;

  double h() const { return h_; }
  double window() const { return W_; }
  double box() const { return opt_.box_factor * W_; }
  cplx plateau() const { return plateau_; }
  const WellData& well() const { return well_; }
  const EffectiveOptions& options() const { return opt_; }

private:
  cplx spectral_parameter(double x, double xi) const;

  GaugeChart chart_;
  WellData well_;
  double h_;
  EffectiveOptions opt_;
  double W_;
  cplx plateau_;
  // Chebyshev-Lobatto tensor table of mu1, rows in x, columns in xi.
  std::vector<double> nodes_, weights_;
  MatC table_;
};

struct GridWeylOperator {
  int M = 0;
  double L = 0.0, h = 0.0;
  double x_center = 0.0, xi_center = 0.0;
  std::vector<double> x;
  MatC matrix;
};

using Symbol1D = std::function<cplx(double x, double xi)>;

// Midpoint-rule Weyl matrix on the periodic grid x_j = x_center - L + j dx.
GridWeylOperator assemble_weyl_grid(const Symbol1D& sym, int M, double L, double h, double x_center = 0.0,
                                    double xi_center = 0.0);

GridWeylOperator assemble_peff(const EffectiveSymbol& sym, int M, double box);

struct EffectiveSpectrum {
  SpectrumResult window;         // eigenvalues in D(mu0, C h), nearest first
  std::vector<cplx> all;         // full matrix spectrum
  double min_gap_over_h = 0.0;   // min |nu_k - nu_l| / h over the window
  double edge_mass = 0.0;        // largest eigenvector weight near the box edge
  std::vector<std::string> advisories;
};

EffectiveSpectrum eff_spectrum(const GridWeylOperator& op, const WellData& well, double C);

// ||(z - op)^{-1}||; throws when z is within 1e-12 of the spectrum.
double resolvent_probe(const GridWeylOperator& op, cplx z, const std::vector<cplx>* spectrum = nullptr);

// max over circles |z - nu_j| = h^(3/2 - kappa) of ||(z - op)^{-1}|| dist(z, sp).
double empirical_C0(const GridWeylOperator& op, const EffectiveSpectrum& sp, double kappa, int samples = 16);

// u32 M, u64 reserved after the magic "MEFF", then row-major complex128.
void write_meff(const MatC& A, const std::string& path);

}  // namespace magspec
