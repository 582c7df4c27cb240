#pragma once

#include <span>

#include "mfrr/lp/model.hpp"

namespace mfrr::lp {

/// Bounded-variable primal simplex with an explicit dense basis inverse.
/// Phase one minimizes artificial infeasibility; pricing is Dantzig with a
/// switch to Bland's rule while pivots stay degenerate; the ratio test is
/// Harris' two-pass variant. Suited to models up to a few thousand rows.
class DenseSimplex {
 public:
  struct Options {
    int max_iterations = 200000;
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    int refactor_every = 64;
  };

  DenseSimplex() = default;
  explicit DenseSimplex(Options opt) : opt_(opt) {}

  Result solve(const Model& model) const;
  /// Solves with column bounds replaced by `lo` / `hi`.
  Result solve(const Model& model, std::span<const double> lo, std::span<const double> hi) const;

 private:
  Options opt_;
};

}  // namespace mfrr::lp
