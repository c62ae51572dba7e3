#include "magspec/direct2d.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace magspec {

cplx MagneticGrid::plaquette(int i, int j) const {
  return std::polar(1.0, edge_theta(i, j) - edge_theta(i + 1, j));
}

DirectOperator assemble_L(const GaugeChart& chart, double h, double L, int n, const DirectOptions& opt) {
  if (!(h > 0) || !(L > 0) || n < 2) throw Error(Error::Kind::InvalidInput, "assemble_L needs h > 0, L > 0, n >= 2");
  const FieldModel& m = chart.model();
  DirectOperator out;
  MagneticGrid& g = out.grid;
  g.L = L;
  g.n = n;
  g.h = h;
  g.d = 2.0 * L / (n + 1);
  const double d = g.d, t = h * h / (d * d);
  if (d > std::sqrt(h) / 4.0) out.advisories.push_back("magnetic phase under-resolved: d > sqrt(h)/4");

  g.theta.assign(static_cast<std::size_t>(n) * (n - 1), 0.0);
  for (int j = 0; j + 1 < n; ++j) {
    const double y = g.coord(j) + 0.5 * d;
    // A2 along the row, accumulated panel by panel.
    double x = g.coord(0);
    double A = gauge_A2(m, {x, y});
    for (int i = 0; i < n; ++i) {
      if (i > 0) {
        const double xn = g.coord(i);
        A += integrate_adaptive([&](double s) { return m.B(Point{s, y}); }, x, xn);
        x = xn;
      }
      double a = A;
      if (opt.extra_A2) a += opt.extra_A2({x, y});
      g.theta[static_cast<std::size_t>(i) * (n - 1) + j] = d * a / h;
    }
  }
  g.V.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.V[g.index(i, j)] = m.V({g.coord(i), g.coord(j)});

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(n) * n * 5);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int a = g.index(i, j);
      trip.emplace_back(a, a, 4.0 * t + h * g.V[a]);
      if (i + 1 < n) {
        const int b = g.index(i + 1, j);
        trip.emplace_back(a, b, -t);
        trip.emplace_back(b, a, -t);
      }
      if (j + 1 < n) {
        const int b = g.index(i, j + 1);
        const double th = g.edge_theta(i, j);
        trip.emplace_back(a, b, -t * std::polar(1.0, -th));
        trip.emplace_back(b, a, -t * std::polar(1.0, th));
      }
    }
  out.matrix.resize(n * n, n * n);
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  out.matrix.makeCompressed();
  return out;
}

Window spectral_window(const WellData& well, double h, double C, double Cprime) {
  return {well.mu0 * h, C * h * h, Cprime * h * h};
}

cplx richardson(const std::vector<double>& d, const std::vector<cplx>& values) {
  const int n = static_cast<int>(d.size());
  if (n == 0 || values.size() != d.size()) throw Error(Error::Kind::InvalidInput, "richardson needs matching inputs");
  // Neville recursion at t = 0 in the variable t = d^2.
  std::vector<cplx> p(values);
  for (int k = 1; k < n; ++k)
    for (int i = 0; i + k < n; ++i) {
      const double ti = d[i] * d[i], tk = d[i + k] * d[i + k];
      p[i] = (tk * p[i] - ti * p[i + 1]) / (tk - ti);
    }
  return p[0];
}

DirectRun direct_extrapolated(const GaugeChart& chart, const WellData&, double h, const Window& win,
                              const DirectParams& par) {
  DirectRun run;
  run.L = par.box_factor * std::sqrt(h);
  ArnoldiOptions ao;
  ao.tol = par.tol;
  ao.reshift = cplx(0.0, h * h * h);
  for (double kd : par.points_per_length) {
    const int n = static_cast<int>(std::lround(2.0 * run.L * kd / std::sqrt(h))) - 1;
    DirectOperator op = assemble_L(chart, h, run.L, n);
    DirectLevel lv;
    lv.n = n;
    lv.d = op.grid.d;
    lv.spectrum = shift_invert_spectrum(op.matrix, win.shift, par.k, ao);
    lv.spectrum.route = Route::Direct;
    run.levels.push_back(std::move(lv));
  }
  // Align every level with the finest one, then extrapolate in d^2.
  const DirectLevel& fine = run.levels.back();
  SpectrumResult& ex = run.extrapolated;
  ex.route = Route::Direct;
  ex.meta = fine.spectrum.meta;
  ex.meta.method = "richardson(" + fine.spectrum.meta.method + ")";
  std::vector<MatchReport> maps;
  for (const DirectLevel& lv : run.levels) maps.push_back(match_spectra(fine.spectrum.eigenvalues, lv.spectrum.eigenvalues));
  for (std::size_t e = 0; e < fine.spectrum.size(); ++e) {
    std::vector<double> ds;
    std::vector<cplx> vs;
    for (std::size_t l = 0; l < run.levels.size(); ++l)
      for (const MatchPair& p : maps[l].pairs)
        if (p.i == static_cast<int>(e)) {
          ds.push_back(run.levels[l].d);
          vs.push_back(run.levels[l].spectrum.eigenvalues[p.j]);
        }
    if (ds.size() != run.levels.size()) continue;
    cplx lam = richardson(ds, vs);
    if (std::abs(lam - win.shift) > win.report_radius) continue;
    // Error estimate: drop the coarsest level and compare.
    cplx lam2 = ds.size() > 2 ? richardson(std::vector<double>(ds.begin() + 1, ds.end()),
                                           std::vector<cplx>(vs.begin() + 1, vs.end()))
                              : vs.back();
    ex.eigenvalues.push_back(lam);
    ex.residuals.push_back(fine.spectrum.residuals[e]);
    run.richardson_delta.push_back(std::abs(lam - fine.spectrum.eigenvalues[e]));
    run.extrapolation_error.push_back(std::abs(lam - lam2));
  }
  assign_clusters(ex, MatC(), 1e-12 * std::max(1.0, std::abs(win.shift)));
  // Keep the per-eigenvalue diagnostics aligned with the sorted eigenvalues.
  std::vector<std::size_t> idx(ex.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(ex.eigenvalues[a] - win.shift) < std::abs(ex.eigenvalues[b] - win.shift);
  });
  auto permute = [&](std::vector<double>& v) {
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
    v = std::move(out);
  };
  permute(run.richardson_delta);
  permute(run.extrapolation_error);
  sort_by_distance(ex, win.shift);
  return run;
}

void export_triplets(const SpMatC& M, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(Error::Kind::InvalidInput, "cannot open " + path);
  os << std::setprecision(17);
  os << M.rows() << ' ' << M.cols() << ' ' << M.nonZeros() << '\n';
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMatC::InnerIterator it(M, k); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

}  // namespace magspec
