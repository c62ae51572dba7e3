#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "magspec/harness.hpp"

namespace magspec {

using nlohmann::json;

namespace {

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

json cvec(const std::vector<cplx>& v) {
  json a = json::array();
  for (cplx z : v) a.push_back(cjson(z));
  return a;
}

// Non-finite values serialize as null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json fit_json(const FineStructureFit& f) {
  json j;
  j["c0_hat"] = cjson(f.c0_hat);
  j["c1_hat"] = cjson(f.c1_hat);
  j["c0_identifiable"] = f.c0_identifiable;
  j["c0_expected"] = cjson(f.c0_expected);
  j["c0_rel_err"] = num(f.c0_rel_err);
  j["levels"] = f.levels;
  j["nuisance_terms"] = f.nuisance;
  j["residuals"] = f.residuals;
  return j;
}

json cell_json(const RouteCell& c) {
  json j;
  j["route"] = route_name(c.route);
  j["ok"] = c.ok;
  if (!c.ok) {
    j["error"] = c.error;
    return j;
  }
  j["spectrum"] = to_json(c.spectrum);
  j["advisories"] = c.advisories;
  if (!c.disc_error.empty()) {
    json d = json::array();
    for (double e : c.disc_error) d.push_back(num(e));
    j["disc_error"] = d;
  }
  if (c.route == Route::Effective) {
    j["gap_over_h"] = num(c.gap_over_h);
    j["edge_mass"] = num(c.edge_mass);
  }
  if (c.route == Route::Direct) j["window_saturated"] = c.window_saturated;
  if (c.C0) j["C0_empirical"] = num(*c.C0);
  if (c.D) j["D_empirical"] = num(*c.D);
  return j;
}

std::string csv_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

json to_json(const SpectrumResult& s) {
  json j;
  j["eigenvalues"] = cvec(s.eigenvalues);
  j["residuals"] = s.residuals;
  j["cluster_ids"] = s.cluster_ids;
  j["cluster_defective"] = s.cluster_defective;
  j["route"] = route_name(s.route);
  json m;
  m["method"] = s.meta.method;
  m["iterations"] = s.meta.iterations;
  m["subspace"] = s.meta.subspace;
  m["restarts"] = s.meta.restarts;
  m["reshifts"] = s.meta.reshifts;
  m["converged"] = s.meta.converged;
  m["notes"] = s.meta.notes;
  j["solver"] = m;
  return j;
}

json to_json(const WellData& w) {
  json j;
  j["q0"] = w.q0;
  j["X0"] = w.X0;
  j["mu0"] = cjson(w.mu0);
  j["c0"] = cjson(w.c0);
  json H = json::array();
  for (int r = 0; r < 2; ++r) H.push_back(json::array({cjson(w.hess_p_q(r, 0)), cjson(w.hess_p_q(r, 1))}));
  j["hess_p_q"] = H;
  j["grad_p_q"] = json::array({cjson(w.grad_p_q(0)), cjson(w.grad_p_q(1))});
  j["Q0"] = {{"a", cjson(w.Q0.a)}, {"b", cjson(w.Q0.b)}, {"c", cjson(w.Q0.c)}, {"omega", cjson(w.Q0.omega)}};
  j["min_F"] = w.min_F;
  j["boundary_min_F"] = w.boundary_min_F;
  j["c0_identity_applicable"] = w.c0_identity_applicable;
  j["c0_identity_rel_err"] = num(w.c0_identity_rel_err);
  return j;
}

json to_json(const SweepReport& r) {
  json j;
  j["model"] = r.model_name;
  j["complete"] = r.complete;
  const RunConfig& c = r.cfg;
  json cfg;
  cfg["h"] = c.h;
  json routes = json::array();
  for (Route x : c.routes) routes.push_back(route_name(x));
  cfg["routes"] = routes;
  cfg["seed"] = c.seed;
  cfg["C"] = c.C;
  cfg["Cprime"] = c.Cprime;
  cfg["kappa"] = c.kappa;
  cfg["tol"] = c.tol;
  cfg["direct_box"] = c.direct_box;
  cfg["direct_points"] = c.direct_points;
  cfg["direct_k"] = c.direct_k;
  cfg["eff_M"] = c.eff_M;
  cfg["eff_window"] = c.eff_window;
  cfg["eff_box"] = c.eff_box;
  cfg["mu1_N"] = c.mu1_N;
  cfg["with_mu1"] = c.with_mu1;
  cfg["local_z"] = c.local_z;
  cfg["fit_levels"] = c.fit_levels;
  cfg["fit_order"] = c.fit_order;
  cfg["refinement"] = c.refinement;
  j["config"] = cfg;
  const ValidationReport& v = r.validation;
  j["validation"] = {{"ok", v.ok},
                     {"min_B", v.min_B},
                     {"max_deriv_rel_err", v.max_deriv_rel_err},
                     {"sup_grad_B", v.sup_grad_B},
                     {"sup_hess_B", v.sup_hess_B},
                     {"sup_abs_V", v.sup_abs_V},
                     {"sup_grad_V", v.sup_grad_V},
                     {"sup_alpha", v.sup_alpha},
                     {"messages", v.messages}};
  json charts = json::array();
  for (const ChartReport& cr : r.charts) {
    json cj;
    cj["u"] = cr.u;
    cj["v"] = cr.v;
    cj["ok"] = cr.ok;
    if (!cr.ok) {
      cj["error"] = cr.error;
      charts.push_back(cj);
      continue;
    }
    cj["well"] = to_json(cr.well);
    json pts = json::array();
    for (const HPoint& hp : cr.points) {
      json pj;
      pj["h"] = hp.h;
      json cells = json::array();
      for (const RouteCell& c : hp.cells) cells.push_back(cell_json(c));
      pj["cells"] = cells;
      pj["compared"] = hp.compared;
      if (hp.compared) {
        json pairs = json::array();
        for (const MatchPair& m : hp.match.pairs) pairs.push_back({{"direct", m.i}, {"effective", m.j}, {"err", m.dist}});
        pj["pairs"] = pairs;
        pj["max_err"] = hp.max_err;
        pj["max_disc_error"] = hp.max_disc_error;
        pj["match_ambiguous"] = hp.match.ambiguous;
        pj["match_second_best_ratio"] =
            num(hp.match.total_cost > 0 ? hp.match.second_best_cost / hp.match.total_cost : INFINITY);
        pj["unmatched_direct"] = hp.match.unmatched_a;
        pj["unmatched_effective"] = hp.match.unmatched_b;
      }
      pts.push_back(pj);
    }
    cj["points"] = pts;
    if (cr.order) {
      cj["order_fit"] = {{"slope", cr.order->slope},
                         {"intercept", cr.order->intercept},
                         {"r2", cr.order->r2},
                         {"used", cr.order->used},
                         {"notes", cr.order->notes}};
    }
    if (cr.fit_direct) cj["fit_direct"] = fit_json(*cr.fit_direct);
    if (cr.fit_effective) cj["fit_effective"] = fit_json(*cr.fit_effective);
    if (cr.fit_quadratic) cj["fit_quadratic"] = fit_json(*cr.fit_quadratic);
    if (cr.fit_direct && cr.fit_effective)
      cj["c1_route_difference"] = std::abs(cr.fit_direct->c1_hat - cr.fit_effective->c1_hat);
    if (cr.gap_consistency) cj["gap_consistency"] = *cr.gap_consistency;
    cj["notes"] = cr.notes;
    charts.push_back(cj);
  }
  j["charts"] = charts;
  return j;
}

std::string spectrum_csv(const std::vector<const RouteCell*>& cells) {
  // RFC 4180: CRLF record separators; numeric fields need no quoting.
  std::string out = "h,j,re_val,im_val,residual\r\n";
  for (const RouteCell* c : cells) {
    if (!c || !c->ok) continue;
    for (std::size_t k = 0; k < c->spectrum.size(); ++k) {
      out += csv_number(c->h) + "," + std::to_string(k + 1) + "," + csv_number(c->spectrum.eigenvalues[k].real()) + "," +
             csv_number(c->spectrum.eigenvalues[k].imag()) + "," + csv_number(c->spectrum.residuals[k]) + "\r\n";
    }
  }
  return out;
}

std::vector<std::string> write_reports(const SweepReport& r) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  fs::create_directories(r.cfg.out_dir);
  auto write = [&](const std::string& name, const std::string& body) {
    const std::string path = (fs::path(r.cfg.out_dir) / name).string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(Error::Kind::InvalidInput, "cannot write " + path);
    os << body;
    paths.push_back(path);
  };
  if (r.cfg.csv) {
    for (std::size_t ci = 0; ci < r.charts.size(); ++ci) {
      const ChartReport& cr = r.charts[ci];
      if (!cr.ok) continue;
      for (Route route : r.cfg.routes) {
        std::vector<const RouteCell*> cells;
        for (const HPoint& hp : cr.points) cells.push_back(hp.cell(route));
        std::string name = r.cfg.prefix + "_" + route_name(route);
        if (r.charts.size() > 1) name += "_chart" + std::to_string(ci);
        write(name + ".csv", spectrum_csv(cells));
      }
    }
  }
  if (r.cfg.json) write(r.cfg.prefix + "_report.json", to_json(r).dump(2) + "\n");
  return paths;
}

}  // namespace magspec
