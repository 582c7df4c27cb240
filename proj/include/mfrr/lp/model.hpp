#pragma once

#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mfrr::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize obj'x + obj_offset
/// subject to row_lo <= A x <= row_hi, col_lo <= x <= col_hi,
/// x_j integral where `integer[j]` is set.
struct Model {
  struct Term {
    int col;
    double coef;
  };

  std::vector<double> obj, col_lo, col_hi;
  std::vector<char> integer;
  std::vector<double> row_lo, row_hi;
  std::vector<std::vector<Term>> rows;
  double obj_offset = 0.0;

  int add_col(double cost, double lo, double hi, bool is_integer = false);
  int add_row(double lo, double hi, std::vector<Term> terms);

  int num_cols() const { return static_cast<int>(obj.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
  std::size_t num_nonzeros() const;

  double objective(std::span<const double> x) const;
  /// Largest absolute bound or row violation of `x`.
  double max_violation(std::span<const double> x) const;
};

/// Column-major copy of the constraint matrix.
struct ColumnMatrix {
  std::vector<int> start;  // size cols + 1
  std::vector<int> row;
  std::vector<double> val;

  explicit ColumnMatrix(const Model& m);
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

std::string to_string(Status s);

struct Result {
  Status status = Status::NumericalFailure;
  double objective = 0.0;  // includes obj_offset
  std::vector<double> x;
  int iterations = 0;
};

}  // namespace mfrr::lp
