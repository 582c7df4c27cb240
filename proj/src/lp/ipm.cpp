#include "mfrr/lp/ipm.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mfrr/common.hpp"

namespace mfrr::lp {
namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;

// Standard form: min c'x  s.t.  A x = b,  l <= x <= u.
struct StandardForm {
  int n = 0, m = 0;
  std::vector<Eigen::Triplet<double>> a;
  Vec c, b, l, u;
  double offset = 0.0;
  std::vector<int> model_col;  // standard column -> model column (-1 for slacks)
  std::vector<double> fixed_value;  // model column -> value if fixed, NaN otherwise
};

bool is_fixed(double lo, double hi) {
  return std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-12 * std::max(1.0, std::abs(lo));
}

// Returns false if a row without free columns is violated.
bool build_standard_form(const Model& model, std::span<const double> lo, std::span<const double> hi,
                         StandardForm& sf) {
  const int nm = model.num_cols();
  sf.fixed_value.assign(nm, std::nan(""));
  std::vector<int> std_col(nm, -1);
  std::vector<double> c, l, u;
  sf.offset = model.obj_offset;
  for (int j = 0; j < nm; ++j) {
    if (is_fixed(lo[j], hi[j])) {
      sf.fixed_value[j] = lo[j];
      sf.offset += model.obj[j] * lo[j];
      continue;
    }
    std_col[j] = static_cast<int>(c.size());
    sf.model_col.push_back(j);
    c.push_back(model.obj[j]);
    l.push_back(lo[j]);
    u.push_back(hi[j]);
  }
  std::vector<double> b;
  int row = 0;
  for (int i = 0; i < model.num_rows(); ++i) {
    double constant = 0.0;
    bool any = false;
    for (const auto& t : model.rows[i]) {
      if (std_col[t.col] < 0) constant += t.coef * sf.fixed_value[t.col];
      else if (t.coef != 0.0) any = true;
    }
    const double rl = model.row_lo[i] - constant, rh = model.row_hi[i] - constant;
    if (!any) {
      const double tol = 1e-9 * (1.0 + std::abs(constant));
      if (rl > tol || rh < -tol) return false;
      continue;
    }
    // Activity range under the column bounds; branching can make a row
    // unsatisfiable, which the iteration itself would not detect.
    double amin = 0.0, amax = 0.0, scale = 1.0;
    for (const auto& t : model.rows[i]) {
      if (std_col[t.col] < 0 || t.coef == 0.0) continue;
      const double a = t.coef * lo[t.col], z = t.coef * hi[t.col];
      amin += std::min(a, z);
      amax += std::max(a, z);
      scale = std::max({scale, std::abs(a), std::abs(z)});
    }
    if (amin > rh + 1e-9 * scale || amax < rl - 1e-9 * scale) return false;
    for (const auto& t : model.rows[i])
      if (std_col[t.col] >= 0 && t.coef != 0.0) sf.a.emplace_back(row, std_col[t.col], t.coef);
    if (is_fixed(rl, rh)) {
      b.push_back(rl);
    } else {
      const int s = static_cast<int>(c.size());
      sf.model_col.push_back(-1);
      c.push_back(0.0);
      l.push_back(rl);
      u.push_back(rh);
      sf.a.emplace_back(row, s, -1.0);
      b.push_back(0.0);
    }
    ++row;
  }
  sf.n = static_cast<int>(c.size());
  sf.m = row;
  sf.c = Eigen::Map<Vec>(c.data(), sf.n);
  sf.l = Eigen::Map<Vec>(l.data(), sf.n);
  sf.u = Eigen::Map<Vec>(u.data(), sf.n);
  sf.b = Eigen::Map<Vec>(b.data(), sf.m);
  return true;
}

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

Result InteriorPoint::solve(const Model& model) const {
  return solve(model, model.col_lo, model.col_hi);
}

Result InteriorPoint::solve(const Model& model, std::span<const double> lo,
                            std::span<const double> hi) const {
  if (static_cast<int>(lo.size()) != model.num_cols() || static_cast<int>(hi.size()) != model.num_cols())
    throw InputError("ipm: bound vectors do not match model");
  Result res;
  for (int j = 0; j < model.num_cols(); ++j)
    if (lo[j] > hi[j]) {
      res.status = Status::Infeasible;
      return res;
    }

  StandardForm sf;
  if (!build_standard_form(model, lo, hi, sf)) {
    res.status = Status::Infeasible;
    return res;
  }
  const int n = sf.n, m = sf.m;

  auto finish = [&](const Vec& xs) {
    res.x.assign(model.num_cols(), 0.0);
    for (int j = 0; j < model.num_cols(); ++j)
      if (!std::isnan(sf.fixed_value[j])) res.x[j] = sf.fixed_value[j];
    for (int k = 0; k < n; ++k)
      if (sf.model_col[k] >= 0) res.x[sf.model_col[k]] = std::clamp(xs[k], sf.l[k], sf.u[k]);
    res.objective = model.objective(res.x);
  };

  if (n == 0) {
    res.status = Status::Optimal;
    finish(Vec());
    return res;
  }

  SpMat A(m, n);
  A.setFromTriplets(sf.a.begin(), sf.a.end());
  A.makeCompressed();

  // Ruiz equilibration: A <- R A C, x = C xs, c <- C c, b <- R b.
  Vec rs = Vec::Ones(m), cs = Vec::Ones(n);
  for (int pass = 0; pass < opt_.equilibration_passes && m > 0; ++pass) {
    Vec rmax = Vec::Zero(m), cmax = Vec::Zero(n);
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it) {
        const double v = std::abs(it.value());
        rmax[it.row()] = std::max(rmax[it.row()], v);
        cmax[it.col()] = std::max(cmax[it.col()], v);
      }
    Vec rf(m), cf(n);
    for (int i = 0; i < m; ++i) rf[i] = rmax[i] > 0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
    for (int j = 0; j < n; ++j) cf[j] = cmax[j] > 0 ? 1.0 / std::sqrt(cmax[j]) : 1.0;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it) it.valueRef() *= rf[it.row()] * cf[it.col()];
    rs = rs.cwiseProduct(rf);
    cs = cs.cwiseProduct(cf);
  }
  Vec c = sf.c.cwiseProduct(cs);
  Vec b = sf.b.cwiseProduct(rs);
  Vec l(n), u(n);
  for (int j = 0; j < n; ++j) {
    l[j] = sf.l[j] / cs[j];
    u[j] = sf.u[j] / cs[j];
  }
  // Objective scaling keeps dual magnitudes moderate.
  const double cscale = std::max(1.0, inf_norm(c));
  c /= cscale;

  std::vector<char> has_l(n), has_u(n);
  for (int j = 0; j < n; ++j) {
    has_l[j] = std::isfinite(l[j]);
    has_u[j] = std::isfinite(u[j]);
  }

  // Starting point.
  Vec x(n), z = Vec::Zero(n), w = Vec::Zero(n), y = Vec::Zero(m);
  for (int j = 0; j < n; ++j) {
    if (has_l[j] && has_u[j]) x[j] = 0.5 * (l[j] + u[j]);
    else if (has_l[j]) x[j] = std::max(l[j] + 1.0, 0.0);
    else if (has_u[j]) x[j] = std::min(u[j] - 1.0, 0.0);
    else x[j] = 0.0;
    if (has_l[j]) z[j] = 1.0;
    if (has_u[j]) w[j] = 1.0;
  }

  // Augmented system pattern: lower triangle of [-D A'; A delta].
  const int N = n + m;
  std::vector<Eigen::Triplet<double>> kt;
  kt.reserve(N + A.nonZeros());
  for (int k = 0; k < N; ++k) kt.emplace_back(k, k, 1.0);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) kt.emplace_back(n + it.row(), it.col(), it.value());
  SpMat K(N, N);
  K.setFromTriplets(kt.begin(), kt.end());
  K.makeCompressed();
  std::vector<double*> diag(N);
  for (int k = 0; k < N; ++k) diag[k] = &K.coeffRef(k, k);

  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  ldlt.analyzePattern(K);

  const double rho0 = 1e-8, delta0 = 1e-8;
  double rho = rho0, delta = delta0;
  Vec D(n), xl(n), ux(n);

  auto solve_kkt = [&](const Vec& r1, const Vec& r2, Vec& dx, Vec& dy) {
    Vec rhs(N);
    rhs << r1, r2;
    Vec sol = ldlt.solve(rhs);
    // Iterative refinement against the factored (regularized) matrix;
    // refining toward the unregularized one diverges when it is singular.
    auto residual = [&](const Vec& v) {
      Vec sx = v.head(n), sy = v.tail(m);
      Vec rr(N);
      rr << r1 - (-(D.cwiseProduct(sx) + rho * sx) + A.transpose() * sy), r2 - (A * sx + delta * sy);
      return rr;
    };
    Vec rr = residual(sol);
    double rnorm = inf_norm(rr);
    for (int it = 0; it < 3 && rnorm > 1e-15 * (1.0 + inf_norm(rhs)); ++it) {
      Vec cand = sol + ldlt.solve(rr);
      Vec cr = residual(cand);
      const double cn = inf_norm(cr);
      if (!(cn < rnorm)) break;
      sol = std::move(cand);
      rr = std::move(cr);
      rnorm = cn;
    }
    dx = sol.head(n);
    dy = sol.tail(m);
  };

  auto max_step = [&](const Vec& v, const Vec& dv, const std::vector<char>& mask) {
    double a = 1.0;
    for (int j = 0; j < static_cast<int>(v.size()); ++j)
      if (mask[j] && dv[j] < 0) a = std::min(a, -v[j] / dv[j]);
    return a;
  };

  double best_merit = kInf;
  Vec best_x = x;
  for (int iter = 0; iter < opt_.max_iterations; ++iter) {
    res.iterations = iter;
    for (int j = 0; j < n; ++j) {
      xl[j] = has_l[j] ? std::max(x[j] - l[j], 1e-300) : 1.0;
      ux[j] = has_u[j] ? std::max(u[j] - x[j], 1e-300) : 1.0;
    }
    Vec rp = b - A * x;
    Vec rd = c - A.transpose() * y - z + w;
    double comp = 0.0;
    int ncomp = 0;
    for (int j = 0; j < n; ++j) {
      if (has_l[j]) { comp += xl[j] * z[j]; ++ncomp; }
      if (has_u[j]) { comp += ux[j] * w[j]; ++ncomp; }
    }
    const double mu = ncomp ? comp / ncomp : 0.0;
    const double pobj = c.dot(x);
    double dobj = b.dot(y);
    for (int j = 0; j < n; ++j) {
      if (has_l[j]) dobj += l[j] * z[j];
      if (has_u[j]) dobj -= u[j] * w[j];
    }
    // Residuals measured in the unscaled problem.
    const double pinf = inf_norm(rp.cwiseQuotient(rs)) / (1.0 + inf_norm(sf.b));
    const double dinf = inf_norm(rd.cwiseQuotient(cs)) * cscale / (1.0 + inf_norm(sf.c));
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    if (opt_.verbose)
      std::fprintf(stderr, "ipm %3d pobj %.10e dobj %.10e pinf %.2e dinf %.2e gap %.2e mu %.2e\n", iter,
                   pobj * cscale, dobj * cscale, pinf, dinf, gap, mu);
    if (pinf < opt_.primal_tol && dinf < opt_.dual_tol && gap < opt_.gap_tol) {
      res.status = Status::Optimal;
      finish(x.cwiseProduct(cs));
      return res;
    }
    const double merit = std::max({pinf / opt_.primal_tol, dinf / opt_.dual_tol, gap / opt_.gap_tol});
    if (merit < best_merit) {
      best_merit = merit;
      best_x = x;
    }
    if (!std::isfinite(pobj) || !std::isfinite(dobj) || inf_norm(x) > 1e15 || inf_norm(y) > 1e20) break;

    for (int j = 0; j < n; ++j)
      D[j] = std::min((has_l[j] ? z[j] / xl[j] : 0.0) + (has_u[j] ? w[j] / ux[j] : 0.0), 1e20);
    rho = rho0;
    delta = delta0;
    bool factored = false;
    for (int attempt = 0; attempt < 6 && !factored; ++attempt) {
      for (int j = 0; j < n; ++j) *diag[j] = -(D[j] + rho);
      for (int i = 0; i < m; ++i) *diag[n + i] = delta;
      ldlt.factorize(K);
      factored = ldlt.info() == Eigen::Success && std::isfinite(ldlt.vectorD().sum());
      if (!factored) {
        rho *= 100.0;
        delta *= 100.0;
      }
    }
    if (!factored) {
      break;
    }

    Vec dx, dy, dz(n), dw(n);
    auto directions = [&](const Vec& rl, const Vec& ru) {
      Vec r1(n);
      for (int j = 0; j < n; ++j) {
        r1[j] = rd[j];
        if (has_l[j]) r1[j] -= rl[j] / xl[j];
        if (has_u[j]) r1[j] += ru[j] / ux[j];
      }
      solve_kkt(r1, rp, dx, dy);
      for (int j = 0; j < n; ++j) {
        dz[j] = has_l[j] ? (rl[j] - z[j] * dx[j]) / xl[j] : 0.0;
        dw[j] = has_u[j] ? (ru[j] + w[j] * dx[j]) / ux[j] : 0.0;
      }
    };
    auto step_lengths = [&](double& ap, double& ad) {
      Vec ndx = -dx;
      ap = std::min(max_step(xl, dx, has_l), max_step(ux, ndx, has_u));
      ad = std::min(max_step(z, dz, has_l), max_step(w, dw, has_u));
    };

    // Predictor.
    Vec rl(n), ru(n);
    for (int j = 0; j < n; ++j) {
      rl[j] = has_l[j] ? -xl[j] * z[j] : 0.0;
      ru[j] = has_u[j] ? -ux[j] * w[j] : 0.0;
    }
    directions(rl, ru);
    double ap, ad;
    step_lengths(ap, ad);
    double mu_aff = 0.0;
    for (int j = 0; j < n; ++j) {
      if (has_l[j]) mu_aff += (xl[j] + ap * dx[j]) * (z[j] + ad * dz[j]);
      if (has_u[j]) mu_aff += (ux[j] - ap * dx[j]) * (w[j] + ad * dw[j]);
    }
    mu_aff = ncomp ? mu_aff / ncomp : 0.0;
    const double sigma = mu > 0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;

    // Corrector.
    for (int j = 0; j < n; ++j) {
      rl[j] = has_l[j] ? sigma * mu - xl[j] * z[j] - dx[j] * dz[j] : 0.0;
      ru[j] = has_u[j] ? sigma * mu - ux[j] * w[j] + dx[j] * dw[j] : 0.0;
    }
    directions(rl, ru);
    step_lengths(ap, ad);
    ap = std::min(1.0, opt_.step_fraction * ap);
    ad = std::min(1.0, opt_.step_fraction * ad);
    x += ap * dx;
    y += ad * dy;
    z += ad * dz;
    w += ad * dw;
  }
  // Near the optimum the iteration can stall on ill-conditioning; accept the
  // best iterate seen if it is close to the requested accuracy.
  res.status = best_merit < 100.0 ? Status::Optimal : Status::NumericalFailure;
  finish(best_merit < kInf ? best_x.cwiseProduct(cs) : x.cwiseProduct(cs));
  return res;
}

}  // namespace mfrr::lp
