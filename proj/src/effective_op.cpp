#include "magspec/effective_op.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "magspec/hermite_weyl.hpp"

namespace magspec {

namespace {

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Barycentric weights of the Chebyshev-Lobatto points cos(pi k/(n-1)).
void lobatto(int n, std::vector<double>& nodes, std::vector<double>& w) {
  nodes.resize(n);
  w.resize(n);
  for (int k = 0; k < n; ++k) {
    nodes[k] = std::cos(M_PI * k / (n - 1));
    w[k] = (k % 2 ? -1.0 : 1.0) * ((k == 0 || k == n - 1) ? 0.5 : 1.0);
  }
}

// Interpolation coefficients c_k(t), summing to one.
void bary_coeffs(const std::vector<double>& nodes, const std::vector<double>& w, double t, Eigen::VectorXd& c) {
  const int n = static_cast<int>(nodes.size());
  c.resize(n);
  for (int k = 0; k < n; ++k)
    if (t == nodes[k]) {
      c.setZero();
      c(k) = 1.0;
      return;
    }
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    c(k) = w[k] / (t - nodes[k]);
    s += c(k);
  }
  c /= s;
}

template <class F>
void parallel_for(int n, int threads, const F& f) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += threads) f(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace

EffectiveSymbol::EffectiveSymbol(GaugeChart chart, WellData well, double h, EffectiveOptions opt)
    : chart_(std::move(chart)), well_(std::move(well)), h_(h), opt_(opt) {
  if (!(h > 0)) throw Error(Error::Kind::InvalidInput, "EffectiveSymbol needs h > 0");
  W_ = opt_.window_factor * std::sqrt(h);
  const FieldModel& m = chart_.model();
  plateau_ = well_.mu0 + 4.0 * opt_.C * h * cplx(m.u, m.v) / (m.u * m.u + m.v * m.v);
  if (!opt_.with_mu1) return;
  if (opt_.cache_n < 4) throw Error(Error::Kind::InvalidInput, "mu1 cache needs at least 4 nodes per axis");
  const double R = opt_.cache_extent * W_;
  // One truncation for the whole table: the smallest N whose doubling moves
  // mu1 by at most 1e-7 (relative) at the centre and the four corners.
  int N = opt_.mu1_N;
  for (auto [sx, sxi] : {std::pair{0, 0}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}}) {
    const double x = well_.X0[1] + R * sx, xi = well_.X0[0] + R * sxi;
    N = std::max(N, mu1(chart_, {xi, x}, spectral_parameter(x, xi), opt_.mu1_N).N / 2);
  }
  // Off-node probes inside the window; the node count grows until they agree
  // with direct evaluation to 1e-7.
  std::vector<std::pair<double, double>> probes;
  for (double a : {-0.83, -0.31, 0.47, 0.91})
    for (double b : {-0.67, 0.13, 0.79}) probes.emplace_back(a * W_, b * W_);
  std::vector<cplx> exact;
  for (auto [dx, dxi] : probes) {
    const double x = well_.X0[1] + dx, xi = well_.X0[0] + dxi;
    exact.push_back(mu1_fixed(chart_, {xi, x}, spectral_parameter(x, xi), N).value);
  }
  for (int n = opt_.cache_n;; n = 3 * (n - 1) / 2 + 1) {
    lobatto(n, nodes_, weights_);
    table_.resize(n, n);
    parallel_for(n * n, opt_.threads, [&](int id) {
      int i = id / n, k = id % n;
      const double x = well_.X0[1] + R * nodes_[i], xi = well_.X0[0] + R * nodes_[k];
      table_(i, k) = mu1_fixed(chart_, {xi, x}, spectral_parameter(x, xi), N).value;
    });
    double err = 0.0;
    for (std::size_t p = 0; p < probes.size(); ++p)
      err = std::max(err, std::abs(mu1_cached(well_.X0[1] + probes[p].first, well_.X0[0] + probes[p].second) - exact[p]));
    if (err <= 1e-7) break;
    if (n >= 145) throw Error(Error::Kind::NoConvergence, "mu1 cache interpolation did not reach 1e-7");
  }
}

cplx EffectiveSymbol::spectral_parameter(double x, double xi) const {
  return opt_.local_z ? principal(x, xi) : well_.mu0;
}

cplx EffectiveSymbol::principal(double x, double xi) const { return chart_.phat({xi, x}); }

cplx EffectiveSymbol::mu1_direct(double x, double xi) const {
  return mu1(chart_, {xi, x}, spectral_parameter(x, xi), opt_.mu1_N).value;
}

cplx EffectiveSymbol::mu1_cached(double x, double xi) const {
  if (!opt_.with_mu1) return 0.0;
  const double R = opt_.cache_extent * W_;
  const double tx = (x - well_.X0[1]) / R, txi = (xi - well_.X0[0]) / R;
  if (std::abs(tx) > 1.0 || std::abs(txi) > 1.0) return 0.0;
  Eigen::VectorXd cx, cxi;
  bary_coeffs(nodes_, weights_, tx, cx);
  bary_coeffs(nodes_, weights_, txi, cxi);
  return cx.cast<cplx>().dot(table_ * cxi.cast<cplx>());
}

double EffectiveSymbol::blend_weight(double x, double xi) const {
  const double r = std::max(std::abs(x - well_.X0[1]), std::abs(xi - well_.X0[0])) / W_;
  return smoothstep(1.0 - (r - 1.0) / opt_.blend_width);
}

cplx EffectiveSymbol::operator()(double x, double xi) const {
  const double w = blend_weight(x, xi);
  if (w == 0.0) return plateau_;
  cplx s = principal(x, xi);
  if (opt_.with_mu1) s += h_ * mu1_cached(x, xi);
  return w * s + (1.0 - w) * plateau_;
}

GridWeylOperator assemble_weyl_grid(const Symbol1D& sym, int M, double L, double h, double x_center,
                                    double xi_center) {
  if (M < 4 || (M & (M - 1)) != 0) throw Error(Error::Kind::InvalidInput, "grid size M must be a power of two");
  GridWeylOperator op;
  op.M = M;
  op.L = L;
  op.h = h;
  op.x_center = x_center;
  op.xi_center = xi_center;
  const double dx = 2.0 * L / M;
  op.x.resize(M);
  for (int j = 0; j < M; ++j) op.x[j] = x_center - L + j * dx;
  std::vector<double> xi(M);
  for (int l = 0; l < M; ++l) xi[l] = xi_center + M_PI * h / L * (l - M / 2);

  // E(r, l) = exp(2 pi i r l / M).
  MatC E(M, M);
  for (int r = 0; r < M; ++r)
    for (int l = 0; l < M; ++l) E(r, l) = std::polar(1.0, 2.0 * M_PI * static_cast<double>((r * l) % M) / M);

  // Symbol rows on the 2M half-grid midpoints, computed on demand.
  std::vector<VecC> rows(2 * M);
  auto row = [&](int p) -> const VecC& {
    p = ((p % (2 * M)) + 2 * M) % (2 * M);
    if (rows[p].size() == 0) {
      const double mid = x_center - L + p * 0.5 * dx;
      rows[p].resize(M);
      for (int l = 0; l < M; ++l) rows[p](l) = sym(mid, xi[l]);
    }
    return rows[p];
  };
  auto entry = [&](int k, int dd) {
    // dd dx xi_l / h = dd dx xi_c / h - pi dd + 2 pi dd l / M.
    const cplx pre = std::polar(1.0, dd * dx * xi_center / h - M_PI * dd);
    const int r = ((dd % M) + M) % M;
    return pre * E.row(r).transpose().cwiseProduct(row(2 * k + dd)).sum() / static_cast<double>(M);
  };
  op.matrix.resize(M, M);
  for (int j = 0; j < M; ++j)
    for (int k = 0; k < M; ++k) {
      int dd = ((j - k) % M + M) % M;
      if (dd >= M / 2) dd -= M;
      if (dd == -M / 2)
        op.matrix(j, k) = 0.5 * (entry(k, dd) + entry(k, -dd));
      else
        op.matrix(j, k) = entry(k, dd);
    }
  return op;
}

GridWeylOperator assemble_peff(const EffectiveSymbol& sym, int M, double box) {
  const WellData& w = sym.well();
  if (box < (1.0 + sym.options().blend_width) * sym.window())
    throw Error(Error::Kind::InvalidInput, "periodic box must contain the blended window");
  return assemble_weyl_grid([&](double x, double xi) { return sym(x, xi); }, M, box, sym.h(), w.X0[1], w.X0[0]);
}

EffectiveSpectrum eff_spectrum(const GridWeylOperator& op, const WellData& well, double C) {
  EffectiveSpectrum out;
  Eigen::ComplexEigenSolver<MatC> es(op.matrix, true);
  if (es.info() != Eigen::Success) throw Error(Error::Kind::NoConvergence, "Schur reduction failed");
  const VecC& ev = es.eigenvalues();
  const MatC& V = es.eigenvectors();
  SpectrumResult full;
  full.route = Route::Effective;
  full.meta.method = "dense-schur";
  full.meta.subspace = op.M;
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    out.all.push_back(ev(i));
    if (std::abs(ev(i) - well.mu0) > C * op.h) continue;
    keep.push_back(static_cast<int>(i));
  }
  MatC Vk(op.M, static_cast<Eigen::Index>(keep.size()));
  const int M = op.M;
  for (std::size_t t = 0; t < keep.size(); ++t) {
    VecC v = V.col(keep[t]);
    v.normalize();
    full.eigenvalues.push_back(ev(keep[t]));
    full.residuals.push_back((op.matrix * v - ev(keep[t]) * v).norm());
    Vk.col(t) = v;
    // Weight in the outer tenth of the box, in x and in the dual variable.
    double mx = 0.0, mxi = 0.0;
    for (int j = 0; j < M; ++j)
      if (std::abs(j - M / 2) > 0.4 * M) mx += std::norm(v(j));
    for (int l = 0; l < M; ++l) {
      if (std::abs(l - M / 2) <= 0.4 * M) continue;
      cplx s = 0.0;
      for (int j = 0; j < M; ++j) s += v(j) * std::polar(1.0, -2.0 * M_PI * static_cast<double>(((l - M / 2) * j) % M) / M);
      mxi += std::norm(s) / M;
    }
    out.edge_mass = std::max({out.edge_mass, mx, mxi});
  }
  assign_clusters(full, Vk, 1e-12 * std::max(1.0, op.matrix.cwiseAbs().maxCoeff()));
  sort_by_distance(full, well.mu0);
  out.window = full;
  out.min_gap_over_h = INFINITY;
  for (std::size_t a = 0; a < full.size(); ++a)
    for (std::size_t b = a + 1; b < full.size(); ++b)
      out.min_gap_over_h = std::min(out.min_gap_over_h, std::abs(full.eigenvalues[a] - full.eigenvalues[b]) / op.h);
  if (out.edge_mass > 1e-8) {
    std::ostringstream os;
    os << "refine box or M: eigenvector weight at the grid boundary " << out.edge_mass;
    out.advisories.push_back(os.str());
  }
  return out;
}

double resolvent_probe(const GridWeylOperator& op, cplx z, const std::vector<cplx>* spectrum) {
  if (spectrum) {
    cplx nearest = 0.0;
    double d = INFINITY;
    for (cplx s : *spectrum)
      if (std::abs(z - s) < d) d = std::abs(z - s), nearest = s;
    if (d < 1e-12) {
      std::ostringstream os;
      os << "resolvent probe too close to the spectrum: nearest eigenvalue " << nearest;
      throw Error(Error::Kind::InvalidInput, os.str());
    }
  }
  double r = resolvent_norm(op.matrix, z);
  if (!std::isfinite(r) || r > 1e12) throw Error(Error::Kind::InvalidInput, "resolvent probe too close to the spectrum");
  return r;
}

double empirical_C0(const GridWeylOperator& op, const EffectiveSpectrum& sp, double kappa, int samples) {
  const double rho = std::pow(op.h, 1.5 - kappa);
  double C0 = 0.0;
  for (cplx nu : sp.window.eigenvalues)
    for (int t = 0; t < samples; ++t) {
      cplx z = nu + std::polar(rho, 2.0 * M_PI * (t + 0.5) / samples);
      double d = INFINITY;
      for (cplx s : sp.all) d = std::min(d, std::abs(z - s));
      C0 = std::max(C0, resolvent_probe(op, z, &sp.all) * d);
    }
  return C0;
}

void write_meff(const MatC& A, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Error::Kind::InvalidInput, "cannot open " + path);
  auto put = [&](const void* p, std::size_t n) {
    // Serialize little-endian regardless of host order.
    const unsigned char* b = static_cast<const unsigned char*>(p);
    unsigned char buf[8];
    std::uint16_t probe = 1;
    bool little = *reinterpret_cast<unsigned char*>(&probe) == 1;
    for (std::size_t i = 0; i < n; ++i) buf[i] = little ? b[i] : b[n - 1 - i];
    os.write(reinterpret_cast<const char*>(buf), static_cast<std::streamsize>(n));
  };
  os.write("MEFF", 4);
  std::uint32_t M = static_cast<std::uint32_t>(A.rows());
  std::uint64_t reserved = 0;
  put(&M, 4);
  put(&reserved, 8);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      double re = A(i, j).real(), im = A(i, j).imag();
      put(&re, 8);
      put(&im, 8);
    }
}

}  // namespace magspec
