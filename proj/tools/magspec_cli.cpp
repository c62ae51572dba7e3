#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "magspec/config.hpp"
#include "magspec/direct2d.hpp"
#include "magspec/effective_op.hpp"
#include "magspec/harness.hpp"
#include "magspec/models.hpp"

using namespace magspec;

namespace {

struct Common {
  std::string config, model, h, out, routes;
  long long seed = -1;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  // --h is the semiclassical parameter, so help is long-form only.
  sub->set_help_flag("--help", "print this help");
  sub->add_option("--config", c.config, "INI configuration file");
  sub->add_option("--model", c.model, "model key (landau, radial_well, imaginary_well, perturbed_well(eps), expr)");
  sub->add_option("--h", c.h, "comma separated, strictly decreasing h values");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--routes", c.routes, "comma separated subset of direct, effective, quadratic");
  sub->add_option("--seed", c.seed, "seed for sampled checks");
  sub->add_option("--threads", c.threads, "worker threads");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (!c.model.empty()) cfg.model = c.model;
  if (!c.h.empty()) cfg.h = parse_double_list(c.h);
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (!c.routes.empty()) cfg.routes = parse_routes(c.routes);
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (c.threads > 0) cfg.threads = c.threads;
  return cfg;
}

struct Prepared {
  FieldModel model;
  GaugeChart chart;
  WellData well;
};

std::vector<Prepared> prepare(const RunConfig& cfg) {
  FieldModel base = config_model(cfg);
  std::vector<Prepared> out;
  for (const auto& [u, v] : config_charts(cfg, base)) {
    FieldModel m = base;
    m.u = u;
    m.v = v;
    GaugeChart chart(m, cfg.w_coeff);
    WellOptions wo;
    wo.margin_frac = cfg.margin;
    WellData w = find_well(chart, cfg.search_box, cfg.grid_n, wo);
    out.push_back({m, chart, w});
  }
  return out;
}

void print_cell(const RouteCell& c) {
  std::cout << route_name(c.route) << " h=" << c.h << "\n";
  for (std::size_t k = 0; k < c.spectrum.size(); ++k)
    std::cout << "  j=" << k + 1 << "  " << c.spectrum.eigenvalues[k] << "  residual " << c.spectrum.residuals[k] << "\n";
  for (const auto& a : c.advisories) std::cout << "  advisory: " << a << "\n";
}

int single_route(const RunConfig& cfg, Route r) {
  validate_config(cfg, false);
  auto prepared = prepare(cfg);
  std::vector<const RouteCell*> ptrs;
  std::vector<RouteCell> cells;
  cells.reserve(cfg.h.size() * prepared.size());
  for (const Prepared& p : prepared)
    for (double h : cfg.h) {
      cells.push_back(run_cell(p.chart, p.well, r, h, cfg));
      print_cell(cells.back());
    }
  for (const RouteCell& c : cells) ptrs.push_back(&c);
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = (std::filesystem::path(cfg.out_dir) / (cfg.prefix + "_" + route_name(r) + ".csv")).string();
  std::ofstream(path, std::ios::binary) << spectrum_csv(ptrs);
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-lying spectrum of semiclassical magnetic Schroedinger operators"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help");
  Common c;
  std::string export_route = "direct";
  std::string export_path;
  int export_n = 0;

  auto* validate = app.add_subcommand("validate", "check the field model");
  auto* well = app.add_subcommand("well", "locate the well and print its data");
  auto* direct = app.add_subcommand("direct", "2D discretization with grid extrapolation");
  auto* effective = app.add_subcommand("effective", "1D effective operator");
  auto* quadratic = app.add_subcommand("quadratic", "quadratic normal-form ladder");
  auto* compare = app.add_subcommand("compare", "all routes at one h, matched");
  auto* sweep = app.add_subcommand("sweep", "full h sweep with fits and probes");
  auto* exportm = app.add_subcommand("export-matrix", "write the direct (triplets) or effective (binary) matrix");
  for (auto* s : {validate, well, direct, effective, quadratic, compare, sweep, exportm}) add_common(s, c);
  exportm->add_option("--route", export_route, "direct or effective")->check(CLI::IsMember({"direct", "effective"}));
  exportm->add_option("--file", export_path, "output file");
  exportm->add_option("--n", export_n, "direct grid size per axis (default from the finest level)");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = resolve(c);
    if (validate->parsed()) {
      FieldModel m = config_model(cfg);
      ValidationReport v = validate_model(m, cfg.search_box, 41, cfg.seed);
      std::cout << (v.ok ? "model ok" : "model INVALID") << "  min B " << v.min_B << "  derivative rel err "
                << v.max_deriv_rel_err << "\n";
      for (const auto& msg : v.messages) std::cout << "  " << msg << "\n";
      return v.ok ? 0 : 2;
    }
    if (well->parsed()) {
      validate_config(cfg, false);
      for (const Prepared& p : prepare(cfg)) std::cout << to_json(p.well).dump(2) << "\n";
      return 0;
    }
    if (direct->parsed()) return single_route(cfg, Route::Direct);
    if (effective->parsed()) return single_route(cfg, Route::Effective);
    if (quadratic->parsed()) return single_route(cfg, Route::Quadratic);
    if (compare->parsed()) {
      validate_config(cfg, false);
      const double h = cfg.h.front();
      for (const Prepared& p : prepare(cfg)) {
        HPoint hp;
        hp.h = h;
        for (Route r : cfg.routes) {
          try {
            hp.cells.push_back(run_cell(p.chart, p.well, r, h, cfg));
            print_cell(hp.cells.back());
          } catch (const Error& e) {
            std::cout << route_name(r) << " failed: " << e.what() << "\n";
          }
        }
        compare_point(hp, p.well, cfg);
        if (hp.compared) {
          std::cout << "matched pairs (direct j, effective j, |lambda - h nu|):\n";
          for (const MatchPair& m : hp.match.pairs) std::cout << "  " << m.i + 1 << " " << m.j + 1 << " " << m.dist << "\n";
          std::cout << "max error " << hp.max_err << (hp.match.ambiguous ? "  (matching ambiguous)" : "") << "\n";
        }
      }
      return 0;
    }
    if (sweep->parsed()) {
      auto t0 = std::chrono::steady_clock::now();
      SweepReport rep = run_sweep(cfg);
      for (const auto& path : write_reports(rep)) std::cout << "wrote " << path << "\n";
      for (const ChartReport& cr : rep.charts) {
        std::cout << "chart (u, v) = (" << cr.u << ", " << cr.v << ")";
        if (!cr.ok) {
          std::cout << " failed: " << cr.error << "\n";
          continue;
        }
        std::cout << "  mu0 " << cr.well.mu0 << "  c0 " << cr.well.c0 << "\n";
        if (cr.order) std::cout << "  order of max |lambda - h nu|: " << cr.order->slope << " (r2 " << cr.order->r2 << ")\n";
        if (cr.fit_direct) std::cout << "  direct fit c0 " << cr.fit_direct->c0_hat << " c1 " << cr.fit_direct->c1_hat << "\n";
        if (cr.fit_effective)
          std::cout << "  effective fit c0 " << cr.fit_effective->c0_hat << " c1 " << cr.fit_effective->c1_hat << "\n";
      }
      std::cerr << "elapsed "
                << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
      return rep.complete ? 0 : 3;
    }
    if (exportm->parsed()) {
      validate_config(cfg, false);
      const double h = cfg.h.front();
      Prepared p = prepare(cfg).front();
      std::filesystem::create_directories(cfg.out_dir);
      if (export_route == "direct") {
        const double L = cfg.direct_box * std::sqrt(h);
        const int n = export_n > 0 ? export_n
                                   : static_cast<int>(std::lround(2.0 * L * cfg.direct_points.back() / std::sqrt(h))) - 1;
        DirectOperator op = assemble_L(p.chart, h, L, n);
        if (export_path.empty()) export_path = (std::filesystem::path(cfg.out_dir) / "direct_matrix.txt").string();
        export_triplets(op.matrix, export_path);
      } else {
        EffectiveOptions eo;
        eo.with_mu1 = cfg.with_mu1;
        eo.local_z = cfg.local_z;
        eo.window_factor = cfg.eff_window;
        eo.box_factor = cfg.eff_box;
        eo.mu1_N = cfg.mu1_N;
        eo.C = cfg.C;
        eo.threads = cfg.threads;
        EffectiveSymbol sym(p.chart, p.well, h, eo);
        GridWeylOperator op = assemble_peff(sym, cfg.eff_M, sym.box());
        if (export_path.empty()) export_path = (std::filesystem::path(cfg.out_dir) / "effective_matrix.meff").string();
        write_meff(op.matrix, export_path);
      }
      std::cout << "wrote " << export_path << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
