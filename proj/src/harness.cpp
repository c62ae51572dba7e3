#include "magspec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "magspec/hermite_weyl.hpp"
#include "magspec/quadratic_model.hpp"

namespace magspec {

OrderFit order_fit(const std::vector<std::pair<double, double>>& points) {
  OrderFit f;
  std::vector<double> X, Y;
  for (const auto& [h, e] : points) {
    if (!(h > 0) || !std::isfinite(e) || e < 0)
      throw Error(Error::Kind::InvalidInput, "order_fit needs h > 0 and finite err >= 0");
    if (e == 0.0) {
      std::ostringstream os;
      os << "dropped h = " << h << ": zero error (super-convergence)";
      f.notes.push_back(os.str());
      continue;
    }
    X.push_back(std::log(h));
    Y.push_back(std::log(e));
  }
  const int n = static_cast<int>(X.size());
  if (n < 3) throw Error(Error::Kind::InvalidInput, "order_fit needs at least three positive errors");
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) mx += X[i], my += Y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
    syy += (Y[i] - my) * (Y[i] - my);
  }
  if (sxx == 0) throw Error(Error::Kind::InvalidInput, "order_fit needs distinct h values");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (int i = 0; i < n; ++i) {
    double r = Y[i] - f.intercept - f.slope * X[i];
    ss += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - ss / syy : 1.0;
  f.used = n;
  return f;
}

FineStructureFit fine_structure_fit(const std::vector<LevelSet>& spectra, const WellData& well, int levels,
                                    int nuisance) {
  const int H = static_cast<int>(spectra.size());
  if (H < 3) throw Error(Error::Kind::InvalidInput, "fine_structure_fit needs at least three h values");
  if (levels < 1 || nuisance < -1) throw Error(Error::Kind::InvalidInput, "fine_structure_fit: bad level/order counts");
  const cplx dir = std::abs(well.c0) > 0 ? well.c0 / std::abs(well.c0) : cplx(1.0);

  std::vector<std::vector<cplx>> y(H);
  int J = levels;
  for (int k = 0; k < H; ++k) {
    const double h = spectra[k].h;
    for (cplx lam : spectra[k].eigenvalues) y[k].push_back((lam - well.mu0 * h) / (h * h));
    std::sort(y[k].begin(), y[k].end(),
              [&](cplx a, cplx b) { return (a * std::conj(dir)).real() < (b * std::conj(dir)).real(); });
    J = std::min<int>(J, static_cast<int>(y[k].size()));
  }
  if (J < 1) throw Error(Error::Kind::InvalidInput, "fine_structure_fit: an h value has no eigenvalues");

  FineStructureFit out;
  out.levels = J;
  // Automatic order keeps one residual degree of freedom per level.
  out.nuisance = nuisance < 0 ? H - 2 : std::min(nuisance, H - 2);
  out.c0_identifiable = J >= 2;
  out.c0_expected = well.c0;
  const int m = out.nuisance;
  const int base = out.c0_identifiable ? 2 : 1;
  const int cols = base + J * m;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(H * J, cols);
  VecC rhs(H * J);
  for (int k = 0; k < H; ++k)
    for (int j = 0; j < J; ++j) {
      const int r = k * J + j;
      const double h = spectra[k].h;
      if (out.c0_identifiable) {
        A(r, 0) = 2.0 * (j + 1) - 1.0;
        A(r, 1) = 1.0;
        rhs(r) = y[k][j];
      } else {
        A(r, 0) = 1.0;
        rhs(r) = y[k][j] - well.c0;
      }
      for (int p = 1; p <= m; ++p) A(r, base + j * m + p - 1) = std::pow(h, p);
    }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < cols) throw Error(Error::Kind::Degenerate, "fine_structure_fit: rank-deficient design");
  Eigen::VectorXd re = qr.solve(rhs.real()), im = qr.solve(rhs.imag());
  VecC sol(cols);
  for (int c = 0; c < cols; ++c) sol(c) = cplx(re(c), im(c));
  if (out.c0_identifiable) {
    out.c0_hat = sol(0);
    out.c1_hat = sol(1);
    out.c0_rel_err = std::abs(out.c0_hat - well.c0) / std::max(std::abs(well.c0), 1e-300);
  } else {
    out.c1_hat = sol(0);
  }
  VecC res = A.cast<cplx>() * sol - rhs;
  out.residuals.assign(J, 0.0);
  for (int j = 0; j < J; ++j) {
    double s = 0;
    for (int k = 0; k < H; ++k) s += std::norm(res(k * J + j));
    out.residuals[j] = std::sqrt(s / H);
  }
  return out;
}

const RouteCell* HPoint::cell(Route r) const {
  for (const RouteCell& c : cells)
    if (c.route == r && c.ok) return &c;
  return nullptr;
}

namespace {

EffectiveOptions effective_options(const RunConfig& cfg) {
  EffectiveOptions eo;
  eo.with_mu1 = cfg.with_mu1;
  eo.local_z = cfg.local_z;
  eo.window_factor = cfg.eff_window;
  eo.box_factor = cfg.eff_box;
  eo.mu1_N = cfg.mu1_N;
  eo.C = cfg.C;
  eo.threads = 1;
  return eo;
}

DirectParams direct_params(const RunConfig& cfg) {
  DirectParams p;
  p.box_factor = cfg.direct_box;
  p.points_per_length = cfg.direct_points;
  p.k = cfg.direct_k;
  p.tol = cfg.tol;
  return p;
}

double max_matched(const MatchReport& m) {
  double e = 0;
  for (const MatchPair& p : m.pairs) e = std::max(e, p.dist);
  return e;
}

RouteCell direct_cell(const GaugeChart& chart, const WellData& well, double h, const RunConfig& cfg) {
  RouteCell c;
  const Window win{well.mu0 * h, cfg.C * h * h, cfg.C * h * h};
  const DirectParams par = direct_params(cfg);
  DirectRun run = direct_extrapolated(chart, well, h, win, par);
  c.spectrum = run.extrapolated;
  c.disc_error = run.extrapolation_error;
  c.window_saturated = static_cast<int>(c.spectrum.size()) >= par.k;
  if (c.window_saturated) c.advisories.push_back("direct: every requested eigenvalue is inside the disc; raise direct_k");
  for (const DirectLevel& lv : run.levels)
    for (const std::string& n : lv.spectrum.meta.notes) c.advisories.push_back("direct n=" + std::to_string(lv.n) + ": " + n);
  if (cfg.refinement) {
    // Box study at the coarsest spacing: enlarge L by half, keep d.
    DirectParams big = par;
    big.box_factor = 1.5 * par.box_factor;
    big.points_per_length = {par.points_per_length.front()};
    DirectRun wide = direct_extrapolated(chart, well, h, win, big);
    DirectParams small = par;
    small.points_per_length = {par.points_per_length.front()};
    DirectRun base = direct_extrapolated(chart, well, h, win, small);
    const double box_err = max_matched(match_spectra(base.extrapolated.eigenvalues, wide.extrapolated.eigenvalues));
    for (double& e : c.disc_error) e += box_err;
  }
  return c;
}

RouteCell effective_cell(const GaugeChart& chart, const WellData& well, double h, const RunConfig& cfg) {
  RouteCell c;
  EffectiveSymbol sym(chart, well, h, effective_options(cfg));
  GridWeylOperator op = assemble_peff(sym, cfg.eff_M, sym.box());
  EffectiveSpectrum sp = eff_spectrum(op, well, cfg.Cprime);
  c.advisories = sp.advisories;
  c.edge_mass = sp.edge_mass;
  c.spectrum = sp.window;
  for (cplx& v : c.spectrum.eigenvalues) v *= h;
  for (double& r : c.spectrum.residuals) r *= h;
  // Probes use the inner disc D(mu0, C h).
  EffectiveSpectrum inner = sp;
  inner.window = filter_disc(sp.window, well.mu0, cfg.C * h);
  c.gap_over_h = INFINITY;
  const auto& ev = inner.window.eigenvalues;
  for (std::size_t a = 0; a < ev.size(); ++a)
    for (std::size_t b = a + 1; b < ev.size(); ++b) c.gap_over_h = std::min(c.gap_over_h, std::abs(ev[a] - ev[b]) / h);
  if (cfg.probes && !ev.empty()) c.C0 = empirical_C0(op, inner, cfg.kappa);
  if (cfg.refinement) {
    GridWeylOperator fine = assemble_peff(sym, 2 * cfg.eff_M, sym.box());
    EffectiveSpectrum sf = eff_spectrum(fine, well, cfg.Cprime);
    MatchReport m = match_spectra(sp.window.eigenvalues, sf.window.eigenvalues);
    c.disc_error.assign(c.spectrum.size(), INFINITY);
    for (const MatchPair& p : m.pairs) c.disc_error[p.i] = h * p.dist;
  }
  return c;
}

RouteCell quadratic_cell(const WellData& well, double h, const RunConfig& cfg) {
  RouteCell c;
  const double ac0 = std::abs(well.c0);
  const int n_max = std::max(1, static_cast<int>(std::floor((cfg.Cprime / ac0 + 1.0) / 2.0)));
  std::vector<cplx> lad = quadratic_spectrum(well.Q0, n_max, h);
  c.spectrum.route = Route::Quadratic;
  c.spectrum.meta.method = "analytic-ladder";
  for (cplx e : lad) {
    c.spectrum.eigenvalues.push_back(h * (well.mu0 + e));
    c.spectrum.residuals.push_back(0.0);
  }
  assign_clusters(c.spectrum, MatC(), 1e-12 * h);
  if (cfg.probes) c.D = quadratic_resolvent_constant(well.Q0, h, cfg.C, cfg.kappa, cfg.quad_N).D;
  return c;
}

std::vector<cplx> ordered_along(std::vector<cplx> v, cplx center, cplx dir) {
  std::sort(v.begin(), v.end(), [&](cplx a, cplx b) {
    return ((a - center) * std::conj(dir)).real() < ((b - center) * std::conj(dir)).real();
  });
  return v;
}

}  // namespace

RouteCell run_cell(const GaugeChart& chart, const WellData& well, Route route, double h, const RunConfig& cfg) {
  RouteCell c;
  switch (route) {
    case Route::Direct: c = direct_cell(chart, well, h, cfg); break;
    case Route::Effective: c = effective_cell(chart, well, h, cfg); break;
    case Route::Quadratic: c = quadratic_cell(well, h, cfg); break;
  }
  c.route = route;
  c.h = h;
  c.spectrum.route = route;
  c.ok = true;
  return c;
}

void compare_point(HPoint& p, const WellData&, const RunConfig&) {
  const RouteCell* d = p.cell(Route::Direct);
  const RouteCell* e = p.cell(Route::Effective);
  if (!d || !e || d->spectrum.size() == 0 || e->spectrum.size() == 0) return;
  p.match = match_spectra(d->spectrum.eigenvalues, e->spectrum.eigenvalues);
  p.compared = true;
  p.max_err = max_matched(p.match);
  p.max_disc_error = 0.0;
  if (!d->disc_error.empty() && !e->disc_error.empty())
    for (const MatchPair& m : p.match.pairs)
      p.max_disc_error = std::max(p.max_disc_error, d->disc_error[m.i] + e->disc_error[m.j]);
  else if (!d->disc_error.empty())
    for (const MatchPair& m : p.match.pairs) p.max_disc_error = std::max(p.max_disc_error, d->disc_error[m.i]);
}

SweepReport run_sweep(const RunConfig& cfg) {
  validate_config(cfg, true);
  SweepReport rep;
  rep.cfg = cfg;
  FieldModel base = config_model(cfg);
  rep.model_name = base.name;
  rep.validation = validate_model(base, cfg.search_box, 41, cfg.seed);
  if (!rep.validation.ok) {
    std::string msg = "model failed validation";
    for (const auto& m : rep.validation.messages) msg += "; " + m;
    throw Error(Error::Kind::InvalidModel, msg);
  }

  struct ChartState {
    std::optional<GaugeChart> chart;
  };
  std::vector<ChartState> states;
  for (const auto& [u, v] : config_charts(cfg, base)) {
    ChartReport cr;
    cr.u = u;
    cr.v = v;
    FieldModel m = base;
    m.u = u;
    m.v = v;
    ChartState st;
    try {
      st.chart.emplace(m, cfg.w_coeff);
      WellOptions wo;
      wo.margin_frac = cfg.margin;
      cr.well = find_well(*st.chart, cfg.search_box, cfg.grid_n, wo);
      cr.ok = true;
    } catch (const Error& e) {
      cr.error = e.what();
      rep.complete = false;
    }
    for (double h : cfg.h) {
      HPoint hp;
      hp.h = h;
      hp.cells.resize(cfg.routes.size());
      for (std::size_t r = 0; r < cfg.routes.size(); ++r) {
        hp.cells[r].route = cfg.routes[r];
        hp.cells[r].h = h;
      }
      cr.points.push_back(std::move(hp));
    }
    rep.charts.push_back(std::move(cr));
    states.push_back(std::move(st));
  }

  // Independent (chart, h, route) jobs; results land in preallocated cells.
  struct Job {
    std::size_t chart, point, route;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < rep.charts.size(); ++c) {
    if (!rep.charts[c].ok) continue;
    for (std::size_t p = 0; p < cfg.h.size(); ++p)
      for (std::size_t r = 0; r < cfg.routes.size(); ++r) jobs.push_back({c, p, r});
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k; (k = next.fetch_add(1)) < jobs.size();) {
      const Job& j = jobs[k];
      RouteCell& slot = rep.charts[j.chart].points[j.point].cells[j.route];
      try {
        slot = run_cell(*states[j.chart].chart, rep.charts[j.chart].well, cfg.routes[j.route], cfg.h[j.point], cfg);
      } catch (const std::exception& e) {
        slot.ok = false;
        slot.error = e.what();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(jobs.size())));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (ChartReport& cr : rep.charts) {
    if (!cr.ok) continue;
    for (HPoint& hp : cr.points) {
      for (const RouteCell& c : hp.cells)
        if (!c.ok) rep.complete = false;
      compare_point(hp, cr.well, cfg);
    }
    std::vector<std::pair<double, double>> errs;
    for (const HPoint& hp : cr.points)
      if (hp.compared) errs.emplace_back(hp.h, hp.max_err);
    if (errs.size() >= 3) {
      try {
        cr.order = order_fit(errs);
      } catch (const Error& e) {
        cr.notes.push_back(std::string("order fit: ") + e.what());
      }
    }
    auto fit_route = [&](Route r) -> std::optional<FineStructureFit> {
      std::vector<LevelSet> sets;
      for (const HPoint& hp : cr.points)
        if (const RouteCell* c = hp.cell(r)) sets.push_back({hp.h, c->spectrum.eigenvalues});
      if (sets.size() < 3) return std::nullopt;
      try {
        return fine_structure_fit(sets, cr.well, cfg.fit_levels, cfg.fit_order);
      } catch (const Error& e) {
        cr.notes.push_back(route_name(r) + " fine-structure fit: " + e.what());
        return std::nullopt;
      }
    };
    cr.fit_direct = fit_route(Route::Direct);
    cr.fit_effective = fit_route(Route::Effective);
    cr.fit_quadratic = fit_route(Route::Quadratic);
    // Gap spacing of the effective ladder against the quadratic model at the smallest h.
    for (auto it = cr.points.rbegin(); it != cr.points.rend(); ++it) {
      const RouteCell* e = it->cell(Route::Effective);
      const RouteCell* q = it->cell(Route::Quadratic);
      if (!e || !q || e->spectrum.size() < 2 || q->spectrum.size() < 2) continue;
      const double h = it->h;
      const cplx dir = cr.well.c0 / std::abs(cr.well.c0);
      auto ev = ordered_along(e->spectrum.eigenvalues, cr.well.mu0 * h, dir);
      auto qv = ordered_along(q->spectrum.eigenvalues, cr.well.mu0 * h, dir);
      cr.gap_consistency = std::abs(std::abs(ev[1] - ev[0]) / std::abs(qv[1] - qv[0]) - 1.0);
      break;
    }
  }
  return rep;
}

}  // namespace magspec
