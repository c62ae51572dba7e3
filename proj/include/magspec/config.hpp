#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "magspec/eigensolve.hpp"
#include "magspec/fields.hpp"

namespace magspec {

struct RunConfig {
  // [model]
  std::string model = "radial_well";  // registry key, or "expr" for B_expr/V_expr
  std::string B_expr, V_expr = "0";
  double b0 = 0.0;                                // expr only; <= 0 samples the search box
  std::vector<std::pair<double, double>> charts;  // (u, v); empty keeps the model's own
  Rect search_box{-3, 3, -3, 3};
  int grid_n = 81;
  double margin = 0.1;

  // [sweep]
  std::vector<double> h{0.1, 0.07, 0.05, 0.035, 0.025};
  std::vector<Route> routes{Route::Direct, Route::Effective, Route::Quadratic};
  std::uint64_t seed = 7;
  int threads = 1;

  // [numerics]
  double C = 6.0, Cprime = 12.0, kappa = 0.2;
  double tol = 1e-8;
  double w_coeff = 0.25;
  double direct_box = 10.0;
  std::vector<double> direct_points{6, 9, 12};
  int direct_k = 8;
  int eff_M = 256;
  double eff_window = 9.0, eff_box = 1.6;
  int mu1_N = 64;
  bool with_mu1 = true;
  bool local_z = false;
  int quad_N = 128;
  int fit_levels = 2;
  int fit_order = -1;  // per-level correction polynomial order; -1 picks (number of h) - 2
  bool probes = true;
  bool refinement = false;

  // [output]
  std::string out_dir = "out";
  std::string prefix = "magspec";
  bool csv = true;
  bool json = true;
};

// Parses INI text with sections [model], [sweep], [numerics], [output].
// Unknown sections or keys and malformed values throw InvalidInput.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

// for_sweep additionally requires at least three strictly decreasing h.
void validate_config(const RunConfig& cfg, bool for_sweep);

std::vector<double> parse_double_list(const std::string& text);
std::vector<Route> parse_routes(const std::string& text);

// Builds the model and the list of charts to analyse.
FieldModel config_model(const RunConfig& cfg);
std::vector<std::pair<double, double>> config_charts(const RunConfig& cfg, const FieldModel& m);

}  // namespace magspec
