#pragma once

#include <string>
#include <vector>

#include "magspec/types.hpp"

namespace magspec {

enum class Route { Direct, Effective, Quadratic };
std::string route_name(Route r);

struct SolverMeta {
  std::string method;
  int iterations = 0;
  int subspace = 0;
  int restarts = 0;
  int reshifts = 0;
  bool converged = true;
  std::vector<std::string> notes;
};

struct SpectrumResult {
  std::vector<cplx> eigenvalues;
  std::vector<double> residuals;
  std::vector<int> cluster_ids;
  std::vector<bool> cluster_defective;  // indexed by cluster id
  Route route = Route::Direct;
  SolverMeta meta;

  std::size_t size() const { return eigenvalues.size(); }
  double max_residual() const;
  int cluster_count() const { return static_cast<int>(cluster_defective.size()); }
};

// Assigns cluster ids with radius 1e3 * max residual (floored at
// floor_radius) and flags clusters whose eigenvectors are numerically
// dependent. vecs may be empty, in which case no cluster is flagged.
void assign_clusters(SpectrumResult& r, const MatC& vecs, double floor_radius);

SpectrumResult dense_spectrum(const MatC& M);

struct ArnoldiOptions {
  double tol = 1e-8;
  int max_restarts = 5;
  unsigned seed = 12345;
  cplx reshift{0.0, 1e-6};  // added to the shift when the factorization is singular
  int max_reshifts = 3;
};

SpectrumResult shift_invert_spectrum(const SpMatC& M, cplx shift, int k, const ArnoldiOptions& opt = {});

// Restriction and ordering helpers.
SpectrumResult filter_disc(const SpectrumResult& r, cplx center, double radius);
void sort_by_distance(SpectrumResult& r, cplx center);

struct MatchPair {
  int i, j;
  double dist;
};

struct MatchReport {
  std::vector<MatchPair> pairs;
  std::vector<int> unmatched_a, unmatched_b;
  double max_err = 0.0, mean_err = 0.0, total_cost = 0.0;
  double second_best_cost = 0.0;
  bool ambiguous = false;
};

// Minimum-cost bipartite matching on |a_i - b_j|; pairs min(|a|, |b|).
MatchReport match_spectra(const std::vector<cplx>& a, const std::vector<cplx>& b);

// ||(z - A)^{-1}||_2, by Lanczos on the inverse Gram operator.
double resolvent_norm(const MatC& A, cplx z);

}  // namespace magspec
