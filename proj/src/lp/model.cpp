#include "mfrr/lp/model.hpp"

#include <algorithm>
#include <cmath>

#include "mfrr/common.hpp"

namespace mfrr::lp {

int Model::add_col(double cost, double lo, double hi, bool is_integer) {
  if (lo > hi) throw InputError("lp: column lower bound exceeds upper bound");
  obj.push_back(cost);
  col_lo.push_back(lo);
  col_hi.push_back(hi);
  integer.push_back(is_integer ? 1 : 0);
  return num_cols() - 1;
}

int Model::add_row(double lo, double hi, std::vector<Term> terms) {
  if (lo > hi) throw InputError("lp: row lower bound exceeds upper bound");
  for (const auto& t : terms)
    if (t.col < 0 || t.col >= num_cols()) throw InputError("lp: row references unknown column");
  row_lo.push_back(lo);
  row_hi.push_back(hi);
  rows.push_back(std::move(terms));
  return num_rows() - 1;
}

std::size_t Model::num_nonzeros() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.size();
  return n;
}

double Model::objective(std::span<const double> x) const {
  double v = obj_offset;
  for (int j = 0; j < num_cols(); ++j) v += obj[j] * x[j];
  return v;
}

double Model::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (int j = 0; j < num_cols(); ++j) {
    worst = std::max(worst, col_lo[j] - x[j]);
    worst = std::max(worst, x[j] - col_hi[j]);
  }
  for (int i = 0; i < num_rows(); ++i) {
    double a = 0.0;
    for (const auto& t : rows[i]) a += t.coef * x[t.col];
    worst = std::max(worst, row_lo[i] - a);
    worst = std::max(worst, a - row_hi[i]);
  }
  return worst;
}

ColumnMatrix::ColumnMatrix(const Model& m) {
  const int n = m.num_cols();
  start.assign(n + 1, 0);
  for (const auto& r : m.rows)
    for (const auto& t : r) ++start[t.col + 1];
  for (int j = 0; j < n; ++j) start[j + 1] += start[j];
  row.resize(start[n]);
  val.resize(start[n]);
  std::vector<int> fill(start.begin(), start.end() - 1);
  for (int i = 0; i < m.num_rows(); ++i)
    for (const auto& t : m.rows[i]) {
      row[fill[t.col]] = i;
      val[fill[t.col]] = t.coef;
      ++fill[t.col];
    }
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
    case Status::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

}  // namespace mfrr::lp
