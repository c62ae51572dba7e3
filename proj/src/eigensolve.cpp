#include "magspec/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/SparseLU>

namespace magspec {

std::string route_name(Route r) {
  switch (r) {
    case Route::Direct: return "direct";
    case Route::Effective: return "effective";
    case Route::Quadratic: return "quadratic";
  }
  return "unknown";
}

double SpectrumResult::max_residual() const {
  double m = 0.0;
  for (double r : residuals) m = std::max(m, r);
  return m;
}

void assign_clusters(SpectrumResult& r, const MatC& vecs, double floor_radius) {
  const int n = static_cast<int>(r.size());
  const double radius = std::max(1e3 * r.max_residual(), floor_radius);
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(r.eigenvalues[i] - r.eigenvalues[j]) <= radius) parent[find(i)] = find(j);
  r.cluster_ids.assign(n, -1);
  std::vector<int> label(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    int root = find(i);
    if (label[root] < 0) label[root] = next++;
    r.cluster_ids[i] = label[root];
  }
  r.cluster_defective.assign(next, false);
  if (vecs.cols() != n) return;
  for (int c = 0; c < next; ++c) {
    std::vector<int> mem;
    for (int i = 0; i < n; ++i)
      if (r.cluster_ids[i] == c) mem.push_back(i);
    if (mem.size() < 2) continue;
    MatC V(vecs.rows(), static_cast<Eigen::Index>(mem.size()));
    for (std::size_t k = 0; k < mem.size(); ++k) V.col(k) = vecs.col(mem[k]).normalized();
    Eigen::JacobiSVD<MatC> svd(V);
    r.cluster_defective[c] = svd.singularValues().minCoeff() < 1e-6;
  }
}

SpectrumResult dense_spectrum(const MatC& M) {
  if (M.rows() != M.cols()) throw Error(Error::Kind::InvalidInput, "dense_spectrum needs a square matrix");
  if (M.rows() > 4096) throw Error(Error::Kind::InvalidInput, "dense_spectrum limited to dimension 4096");
  SpectrumResult r;
  r.meta.method = "dense-schur";
  r.meta.subspace = static_cast<int>(M.rows());
  if (M.rows() == 0) return r;
  Eigen::ComplexEigenSolver<MatC> es(M, true);
  if (es.info() != Eigen::Success) throw Error(Error::Kind::NoConvergence, "Schur reduction failed");
  const VecC& ev = es.eigenvalues();
  const MatC& V = es.eigenvectors();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    r.eigenvalues.push_back(ev(i));
    VecC v = V.col(i);
    r.residuals.push_back((M * v - ev(i) * v).norm() / v.norm());
  }
  assign_clusters(r, V, 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()));
  return r;
}

namespace {

using SparseLUC = Eigen::SparseLU<SpMatC, Eigen::COLAMDOrdering<int>>;

bool factor_ok(SparseLUC& lu, const SpMatC& A) {
  lu.factorize(A);
  if (lu.info() != Eigen::Success) return false;
  // Probe on a fixed vector; a singular factor shows up as a blow-up.
  VecC x = VecC::Ones(A.rows());
  VecC y = lu.solve(x);
  if (!y.allFinite()) return false;
  double rel = (A * y - x).norm() / x.norm();
  return rel < 1e-6;
}

}  // namespace

SpectrumResult shift_invert_spectrum(const SpMatC& M, cplx shift, int k, const ArnoldiOptions& opt) {
  const Eigen::Index n = M.rows();
  if (n != M.cols() || n < 2) throw Error(Error::Kind::InvalidInput, "shift_invert_spectrum needs a square matrix");
  k = std::clamp(k, 1, static_cast<int>(n) - 1);
  SpectrumResult res;
  res.meta.method = "shift-invert-arnoldi";

  SpMatC Id(n, n);
  Id.setIdentity();
  SparseLUC lu;
  SpMatC A = M - shift * Id;
  A.makeCompressed();
  lu.analyzePattern(A);
  cplx sigma = shift;
  while (!factor_ok(lu, A)) {
    if (res.meta.reshifts >= opt.max_reshifts)
      throw Error(Error::Kind::IllConditioned, "shift-invert factorization singular after re-shifts");
    ++res.meta.reshifts;
    sigma += opt.reshift;
    std::ostringstream os;
    os << "factorization singular, re-shifted to " << sigma;
    res.meta.notes.push_back(os.str());
    A = M - sigma * Id;
    A.makeCompressed();
  }

  std::mt19937 rng(opt.seed);
  std::normal_distribution<double> nd;
  VecC start(n);
  for (Eigen::Index i = 0; i < n; ++i) start(i) = cplx(nd(rng), nd(rng));

  int m = std::min<int>(static_cast<int>(n), 4 * k + 20);
  struct Ritz {
    cplx lambda;
    double residual;
  };
  for (int cycle = 0; cycle <= opt.max_restarts; ++cycle) {
    res.meta.restarts = cycle;
    res.meta.subspace = m;
    MatC V(n, m + 1);
    MatC H = MatC::Zero(m + 1, m);
    V.col(0) = start.normalized();
    int mm = m;
    for (int j = 0; j < m; ++j) {
      VecC w = lu.solve(V.col(j));
      ++res.meta.iterations;
      // Classical Gram-Schmidt with one reorthogonalization pass.
      for (int pass = 0; pass < 2; ++pass) {
        VecC c = V.leftCols(j + 1).adjoint() * w;
        w -= V.leftCols(j + 1) * c;
        H.col(j).head(j + 1) += c;
      }
      double beta = w.norm();
      H(j + 1, j) = beta;
      if (beta < 1e-13 * H.col(j).norm()) {
        mm = j + 1;
        break;
      }
      V.col(j + 1) = w / beta;
    }
    Eigen::ComplexEigenSolver<MatC> es(H.topLeftCorner(mm, mm), true);
    std::vector<int> order(mm);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b)); });
    const int want = std::min(k, mm);
    std::vector<Ritz> got;
    VecC next = VecC::Zero(n);
    MatC X(n, want);
    int certified = 0;
    for (int t = 0; t < want; ++t) {
      int i = order[t];
      cplx theta = es.eigenvalues()(i);
      VecC x = V.leftCols(mm) * es.eigenvectors().col(i);
      cplx lam = sigma + 1.0 / theta;
      double r = (M * x - lam * x).norm() / x.norm();
      got.push_back({lam, r});
      X.col(t) = x;
      if (r <= opt.tol)
        ++certified;
      else
        next += x.normalized();
    }
    if (certified == want || cycle == opt.max_restarts) {
      res.eigenvalues.clear();
      res.residuals.clear();
      std::vector<int> keep;
      for (int t = 0; t < want; ++t)
        if (got[t].residual <= opt.tol) keep.push_back(t);
      MatC Xk(n, static_cast<Eigen::Index>(keep.size()));
      for (std::size_t t = 0; t < keep.size(); ++t) {
        res.eigenvalues.push_back(got[keep[t]].lambda);
        res.residuals.push_back(got[keep[t]].residual);
        Xk.col(t) = X.col(keep[t]);
      }
      res.meta.converged = static_cast<int>(keep.size()) == k;
      if (!res.meta.converged) {
        std::ostringstream os;
        os << "partial result: " << keep.size() << " of " << k << " eigenvalues certified";
        res.meta.notes.push_back(os.str());
      }
      assign_clusters(res, Xk, 1e-12 * std::max(1.0, std::abs(shift)));
      sort_by_distance(res, shift);
      return res;
    }
    // Explicit restart from the unconverged wanted Ritz vectors, with a
    // larger subspace.
    for (int t = 0; t < want; ++t)
      if (got[t].residual <= opt.tol) next += 1e-3 * X.col(t).normalized();
    start = next;
    m = std::min<int>(static_cast<int>(n), m + 2 * k + 10);
  }
  return res;
}

SpectrumResult filter_disc(const SpectrumResult& r, cplx center, double radius) {
  SpectrumResult out;
  out.route = r.route;
  out.meta = r.meta;
  std::vector<int> remap(r.cluster_defective.size(), -1);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::abs(r.eigenvalues[i] - center) > radius) continue;
    out.eigenvalues.push_back(r.eigenvalues[i]);
    out.residuals.push_back(r.residuals[i]);
    int c = r.cluster_ids.empty() ? -1 : r.cluster_ids[i];
    if (c >= 0) {
      if (remap[c] < 0) {
        remap[c] = static_cast<int>(out.cluster_defective.size());
        out.cluster_defective.push_back(r.cluster_defective[c]);
      }
      out.cluster_ids.push_back(remap[c]);
    }
  }
  return out;
}

void sort_by_distance(SpectrumResult& r, cplx center) {
  std::vector<std::size_t> idx(r.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(r.eigenvalues[a] - center) < std::abs(r.eigenvalues[b] - center);
  });
  SpectrumResult old = r;
  for (std::size_t t = 0; t < idx.size(); ++t) {
    r.eigenvalues[t] = old.eigenvalues[idx[t]];
    r.residuals[t] = old.residuals[idx[t]];
    if (!old.cluster_ids.empty()) r.cluster_ids[t] = old.cluster_ids[idx[t]];
  }
}

namespace {

// Hungarian algorithm with potentials; rows <= cols. Returns row -> col.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size()), m = n ? static_cast<int>(cost[0].size()) : 0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      if (j1 == 0) return {};  // no finite completion
      for (int j = 0; j <= m; ++j) {
        if (used[j])
          u[p[j]] += delta, v[j] -= delta;
        else
          minv[j] -= delta;
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j]) row[p[j] - 1] = j - 1;
  return row;
}

double assignment_cost(const std::vector<std::vector<double>>& c, const std::vector<int>& row) {
  double s = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) s += c[i][row[i]];
  return s;
}

}  // namespace

MatchReport match_spectra(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  MatchReport rep;
  const bool flip = a.size() > b.size();
  const auto& rows = flip ? b : a;
  const auto& cols = flip ? a : b;
  if (rows.empty()) {
    for (std::size_t i = 0; i < a.size(); ++i) rep.unmatched_a.push_back(static_cast<int>(i));
    for (std::size_t j = 0; j < b.size(); ++j) rep.unmatched_b.push_back(static_cast<int>(j));
    return rep;
  }
  std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) cost[i][j] = std::abs(rows[i] - cols[j]);
  std::vector<int> row = hungarian(cost);
  rep.total_cost = assignment_cost(cost, row);

  // Second-best: forbid each optimal edge in turn.
  rep.second_best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < row.size(); ++i) {
    auto c2 = cost;
    c2[i][row[i]] = std::numeric_limits<double>::infinity();
    std::vector<int> alt = hungarian(c2);
    if (alt.empty()) continue;
    double s = assignment_cost(c2, alt);
    if (std::isfinite(s)) rep.second_best_cost = std::min(rep.second_best_cost, s);
  }
  rep.ambiguous = std::isfinite(rep.second_best_cost) && rep.second_best_cost <= 1.1 * rep.total_cost;

  std::vector<char> used_col(cols.size(), 0);
  for (std::size_t i = 0; i < row.size(); ++i) {
    used_col[row[i]] = 1;
    MatchPair pr{flip ? row[i] : static_cast<int>(i), flip ? static_cast<int>(i) : row[i], cost[i][row[i]]};
    rep.pairs.push_back(pr);
    rep.max_err = std::max(rep.max_err, pr.dist);
  }
  rep.mean_err = rep.total_cost / static_cast<double>(rep.pairs.size());
  std::sort(rep.pairs.begin(), rep.pairs.end(), [](const MatchPair& x, const MatchPair& y) { return x.i < y.i; });
  for (std::size_t j = 0; j < cols.size(); ++j)
    if (!used_col[j]) (flip ? rep.unmatched_a : rep.unmatched_b).push_back(static_cast<int>(j));
  return rep;
}

double resolvent_norm(const MatC& A, cplx z) {
  const Eigen::Index n = A.rows();
  Eigen::PartialPivLU<MatC> lu(z * MatC::Identity(n, n) - A);
  auto gram_inv = [&](const VecC& x) -> VecC { return lu.adjoint().solve(lu.solve(x)); };
  // Lanczos with full reorthogonalization on the Hermitian (z - A)^{-*}(z - A)^{-1};
  // power iteration stalls when the two largest singular values are close.
  std::mt19937 rng(99);
  std::normal_distribution<double> nd;
  const Eigen::Index kmax = std::min<Eigen::Index>(n, 60);
  MatC Q(n, kmax);
  VecC q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = cplx(nd(rng), nd(rng));
  Q.col(0) = q.normalized();
  std::vector<double> alpha, beta;
  double top = 0.0;
  for (Eigen::Index k = 0; k < kmax; ++k) {
    VecC w = gram_inv(Q.col(k));
    alpha.push_back((Q.col(k).dot(w)).real());
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).adjoint() * w);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k + 1, k + 1);
    for (Eigen::Index i = 0; i <= k; ++i) {
      T(i, i) = alpha[i];
      if (i < k) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    const double t = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(T, Eigen::EigenvaluesOnly).eigenvalues()(k);
    const double b = w.norm();
    const bool settled = k > 1 && std::abs(t - top) <= 1e-13 * t;
    top = t;
    if (settled || k + 1 == kmax || !(b > 1e-14 * t)) break;
    beta.push_back(b);
    Q.col(k + 1) = w / b;
  }
  return std::sqrt(top);
}

}  // namespace magspec
