#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "magspec/config.hpp"
#include "magspec/direct2d.hpp"
#include "magspec/effective_op.hpp"
#include "magspec/eigensolve.hpp"
#include "magspec/fields.hpp"

namespace magspec {

struct OrderFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  int used = 0;
  std::vector<std::string> notes;
};

// Least squares of log err against log h. Needs three positive entries
// after zeros are dropped.
OrderFit order_fit(const std::vector<std::pair<double, double>>& points);

struct FineStructureFit {
  cplx c0_hat{}, c1_hat{};
  bool c0_identifiable = false;
  int levels = 0;      // j = 1..levels
  int nuisance = 0;    // per-level correction terms d_{j,p} h^p, p = 1..nuisance
  std::vector<double> residuals;  // rms misfit per j
  cplx c0_expected{};
  double c0_rel_err = 0.0;
};

struct LevelSet {
  double h;
  std::vector<cplx> eigenvalues;  // lambda scale
};

// Joint fit of (lambda_j - mu0 h)/h^2 = (2j-1) c0 + c1 + sum_p d_{j,p} h^p.
// Levels are ordered along the direction of the expected c0. nuisance < 0
// selects the order (number of h values) - 2.
FineStructureFit fine_structure_fit(const std::vector<LevelSet>& spectra, const WellData& well, int levels = 2,
                                    int nuisance = -1);

struct RouteCell {
  Route route = Route::Direct;
  double h = 0.0;
  bool ok = false;
  std::string error;
  SpectrumResult spectrum;  // lambda scale; effective values are h * nu
  std::vector<double> disc_error;  // per eigenvalue, when a refinement study ran
  std::vector<std::string> advisories;
  // Route specific probes.
  double gap_over_h = 0.0;      // effective
  double edge_mass = 0.0;       // effective
  std::optional<double> C0;     // effective
  std::optional<double> D;      // quadratic
  bool window_saturated = false;  // direct: all k requested eigenvalues fell inside the disc
};

struct HPoint {
  double h = 0.0;
  std::vector<RouteCell> cells;
  bool compared = false;
  MatchReport match;             // direct (a) against effective (b)
  double max_err = 0.0;
  double max_disc_error = 0.0;   // direct and effective discretization estimates on matched pairs
  const RouteCell* cell(Route r) const;
};

struct ChartReport {
  double u = 1.0, v = 0.0;
  bool ok = false;
  std::string error;
  WellData well;
  std::vector<HPoint> points;
  std::optional<OrderFit> order;
  std::optional<FineStructureFit> fit_direct, fit_effective, fit_quadratic;
  std::optional<double> gap_consistency;  // |effective gap / quadratic gap - 1| at the smallest h
  std::vector<std::string> notes;
};

struct SweepReport {
  RunConfig cfg;
  std::string model_name;
  ValidationReport validation;
  std::vector<ChartReport> charts;
  bool complete = true;
};

// Computes one route at one h. Throws on failure.
RouteCell run_cell(const GaugeChart& chart, const WellData& well, Route route, double h, const RunConfig& cfg);

// Same-h comparison of direct against effective.
void compare_point(HPoint& p, const WellData& well, const RunConfig& cfg);

SweepReport run_sweep(const RunConfig& cfg);

nlohmann::json to_json(const SweepReport& r);
nlohmann::json to_json(const WellData& w);
nlohmann::json to_json(const SpectrumResult& s);

// CSV per route (h, j, re_val, im_val, residual) and the JSON report.
// Returns the written paths.
std::vector<std::string> write_reports(const SweepReport& r);
std::string spectrum_csv(const std::vector<const RouteCell*>& cells);

}  // namespace magspec
