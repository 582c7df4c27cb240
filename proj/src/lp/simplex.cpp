#include "mfrr/lp/simplex.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mfrr/common.hpp"

namespace mfrr::lp {
namespace {

// Working problem: columns are structurals, then one slack per row, then one
// artificial per row. Row i reads  a_i x - s_i + sigma_i r_i = 0.
class Tableau {
 public:
  Tableau(const Model& m, std::span<const double> lo, std::span<const double> hi,
          const DenseSimplex::Options& opt)
      : m_(m.num_rows()), n_(m.num_cols()), opt_(opt), cols_(m) {
    const int N = n_ + 2 * m_;
    lo_.assign(N, 0.0);
    hi_.assign(N, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lo[j];
      hi_[j] = hi[j];
    }
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = m.row_lo[i];
      hi_[n_ + i] = m.row_hi[i];
      lo_[n_ + m_ + i] = 0.0;
      hi_[n_ + m_ + i] = kInf;
    }
    sigma_.assign(m_, 1.0);
    cost_.assign(N, 0.0);
    x_.assign(N, 0.0);
    basic_pos_.assign(N, -1);
    basis_.assign(m_, -1);

    for (int j = 0; j < n_; ++j) x_[j] = initial_value(lo_[j], hi_[j]);
    std::vector<double> act(m_, 0.0);
    for (int j = 0; j < n_; ++j)
      for (int k = cols_.start[j]; k < cols_.start[j + 1]; ++k) act[cols_.row[k]] += cols_.val[k] * x_[j];
    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i, r = n_ + m_ + i;
      if (act[i] >= lo_[s] - opt_.feasibility_tol && act[i] <= hi_[s] + opt_.feasibility_tol) {
        x_[s] = act[i];
        set_basic(i, s);
        hi_[r] = 0.0;  // artificial unused
      } else {
        const double b = act[i] < lo_[s] ? lo_[s] : hi_[s];
        x_[s] = b;
        sigma_[i] = b - act[i] > 0 ? 1.0 : -1.0;
        x_[r] = std::abs(b - act[i]);
        set_basic(i, r);
        needs_phase1_ = true;
      }
    }
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    refactor();
  }

  Result run(const Model& model) {
    Result res;
    if (needs_phase1_) {
      for (int i = 0; i < m_; ++i) cost_[n_ + m_ + i] = 1.0;
      auto st = iterate(res.iterations);
      if (st != Status::Optimal) {
        res.status = st == Status::Unbounded ? Status::NumericalFailure : st;
        return res;
      }
      double infeas = 0.0;
      for (int i = 0; i < m_; ++i) infeas += x_[n_ + m_ + i];
      if (infeas > 1e-7 * (1.0 + scale_)) {
        res.status = Status::Infeasible;
        return res;
      }
      for (int i = 0; i < m_; ++i) {
        cost_[n_ + m_ + i] = 0.0;
        hi_[n_ + m_ + i] = 0.0;
        x_[n_ + m_ + i] = std::min(x_[n_ + m_ + i], 0.0);
      }
    }
    for (int j = 0; j < n_; ++j) cost_[j] = model.obj[j];
    refactor();
    auto st = iterate(res.iterations);
    res.status = st;
    if (st != Status::Optimal) return res;
    res.x.assign(x_.begin(), x_.begin() + n_);
    for (int j = 0; j < n_; ++j) res.x[j] = std::clamp(res.x[j], lo_[j], hi_[j]);
    res.objective = model.objective(res.x);
    return res;
  }

 private:
  static double initial_value(double lo, double hi) {
    if (std::isfinite(lo)) return lo;
    if (std::isfinite(hi)) return hi;
    return 0.0;
  }

  void set_basic(int pos, int var) {
    basis_[pos] = var;
    basic_pos_[var] = pos;
  }

  // Column `var` of the working matrix, as (row, value) pairs.
  template <class F>
  void for_column(int var, F&& f) const {
    if (var < n_) {
      for (int k = cols_.start[var]; k < cols_.start[var + 1]; ++k) f(cols_.row[k], cols_.val[k]);
    } else if (var < n_ + m_) {
      f(var - n_, -1.0);
    } else {
      const int i = var - n_ - m_;
      f(i, sigma_[i]);
    }
  }

  void refactor() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int p = 0; p < m_; ++p) for_column(basis_[p], [&](int r, double v) { B(r, p) += v; });
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    binv_ = lu.inverse();
    // Recompute basic values from the nonbasic ones: B x_B = -N x_N.
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    const int N = n_ + 2 * m_;
    scale_ = 0.0;
    for (int j = 0; j < N; ++j) {
      if (basic_pos_[j] >= 0) continue;
      const double xj = x_[j];
      if (xj == 0.0) continue;
      for_column(j, [&](int r, double v) { rhs[r] -= v * xj; });
      scale_ = std::max(scale_, std::abs(xj));
    }
    Eigen::VectorXd xb = binv_ * rhs;
    for (int p = 0; p < m_; ++p) {
      x_[basis_[p]] = xb[p];
      scale_ = std::max(scale_, std::abs(xb[p]));
    }
  }

  Status iterate(int& iterations) {
    const int N = n_ + 2 * m_;
    Eigen::VectorXd y(m_), w(m_);
    int degenerate_run = 0;
    int since_refactor = 0;
    while (true) {
      if (iterations >= opt_.max_iterations) return Status::IterationLimit;
      if (since_refactor >= opt_.refactor_every) {
        refactor();
        since_refactor = 0;
      }
      // Duals y = B^-T c_B.
      Eigen::VectorXd cb(m_);
      for (int p = 0; p < m_; ++p) cb[p] = cost_[basis_[p]];
      y = binv_.transpose() * cb;

      const bool bland = degenerate_run > 50;
      int enter = -1;
      double best = 0.0;
      int dir = 0;
      for (int j = 0; j < N; ++j) {
        if (basic_pos_[j] >= 0 || lo_[j] == hi_[j]) continue;
        double d = cost_[j];
        for_column(j, [&](int r, double v) { d -= y[r] * v; });
        const bool at_lo = x_[j] <= lo_[j] + opt_.feasibility_tol;
        const bool at_hi = x_[j] >= hi_[j] - opt_.feasibility_tol;
        int jdir = 0;
        if (d < -opt_.optimality_tol && !at_hi) jdir = +1;
        else if (d > opt_.optimality_tol && !at_lo) jdir = -1;
        if (jdir == 0) continue;
        if (bland) {
          enter = j;
          dir = jdir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          enter = j;
          dir = jdir;
        }
      }
      if (enter < 0) return Status::Optimal;

      w.setZero();
      for_column(enter, [&](int r, double v) { w += v * binv_.col(r); });

      // Harris pass one: largest step with relaxed bounds.
      const double tol = opt_.feasibility_tol;
      double theta_max = hi_[enter] - lo_[enter];
      for (int p = 0; p < m_; ++p) {
        const double a = dir * w[p];
        if (std::abs(a) < 1e-9) continue;
        const int var = basis_[p];
        if (a > 0 && std::isfinite(lo_[var]))
          theta_max = std::min(theta_max, (x_[var] - lo_[var] + tol) / a);
        else if (a < 0 && std::isfinite(hi_[var]))
          theta_max = std::min(theta_max, (hi_[var] - x_[var] + tol) / -a);
      }
      if (!std::isfinite(theta_max)) return Status::Unbounded;
      // Pass two: among ratios within theta_max pick the largest pivot.
      int leave = -1;
      double pivot = 0.0, theta = theta_max;
      bool to_lower = false;
      for (int p = 0; p < m_; ++p) {
        const double a = dir * w[p];
        if (std::abs(a) < 1e-9) continue;
        const int var = basis_[p];
        double ratio;
        bool lower;
        if (a > 0 && std::isfinite(lo_[var])) {
          ratio = (x_[var] - lo_[var]) / a;
          lower = true;
        } else if (a < 0 && std::isfinite(hi_[var])) {
          ratio = (hi_[var] - x_[var]) / -a;
          lower = false;
        } else {
          continue;
        }
        if (ratio <= theta_max && std::abs(a) > pivot) {
          pivot = std::abs(a);
          leave = p;
          theta = std::max(ratio, 0.0);
          to_lower = lower;
        }
      }
      const double flip = hi_[enter] - lo_[enter];
      if (leave >= 0 && flip <= theta) leave = -1;
      if (leave < 0) theta = flip;

      for (int p = 0; p < m_; ++p) x_[basis_[p]] -= theta * dir * w[p];
      x_[enter] += theta * dir;
      degenerate_run = theta < 1e-12 ? degenerate_run + 1 : 0;
      ++iterations;

      if (leave < 0) {
        x_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
        continue;
      }
      const int out = basis_[leave];
      x_[out] = to_lower ? lo_[out] : hi_[out];
      basic_pos_[out] = -1;
      set_basic(leave, enter);
      // Rank-one update of the inverse.
      const double wr = w[leave];
      Eigen::RowVectorXd row = binv_.row(leave) / wr;
      for (int p = 0; p < m_; ++p) {
        if (p == leave) continue;
        if (w[p] != 0.0) binv_.row(p) -= w[p] * row;
      }
      binv_.row(leave) = row;
      ++since_refactor;
    }
  }

  int m_, n_;
  const DenseSimplex::Options& opt_;
  ColumnMatrix cols_;
  std::vector<double> lo_, hi_, cost_, x_, sigma_;
  std::vector<int> basis_, basic_pos_;
  Eigen::MatrixXd binv_;
  bool needs_phase1_ = false;
  double scale_ = 1.0;
};

}  // namespace

Result DenseSimplex::solve(const Model& model) const {
  return solve(model, model.col_lo, model.col_hi);
}

Result DenseSimplex::solve(const Model& model, std::span<const double> lo,
                           std::span<const double> hi) const {
  if (static_cast<int>(lo.size()) != model.num_cols() || static_cast<int>(hi.size()) != model.num_cols())
    throw InputError("simplex: bound vectors do not match model");
  for (int j = 0; j < model.num_cols(); ++j)
    if (lo[j] > hi[j]) return {Status::Infeasible, 0.0, {}, 0};
  for (int i = 0; i < model.num_rows(); ++i)
    if (model.row_lo[i] > model.row_hi[i]) return {Status::Infeasible, 0.0, {}, 0};
  if (model.num_rows() == 0) {
    Result r;
    r.x.resize(model.num_cols());
    for (int j = 0; j < model.num_cols(); ++j) {
      const double c = model.obj[j];
      const double v = c > 0 ? lo[j] : (c < 0 ? hi[j] : (std::isfinite(lo[j]) ? lo[j] : (std::isfinite(hi[j]) ? hi[j] : 0.0)));
      if (!std::isfinite(v)) return {Status::Unbounded, 0.0, {}, 0};
      r.x[j] = v;
    }
    r.status = Status::Optimal;
    r.objective = model.objective(r.x);
    return r;
  }
  Tableau tab(model, lo, hi, opt_);
  return tab.run(model);
}

}  // namespace mfrr::lp
