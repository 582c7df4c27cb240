#pragma once

#include <span>

#include "mfrr/lp/model.hpp"

namespace mfrr::lp {

/// Primal-dual interior-point method (Mehrotra predictor-corrector) for
/// bounded LPs. Each iteration factors the regularized augmented system
///   [-(D + rho I)  A'   ]
///   [  A           delta I]
/// with a sparse LDL' under approximate minimum degree ordering, so
/// block-angular two-stage models are handled without densifying the
/// first-stage columns. Requires a feasible, bounded model: infeasibility is
/// reported only as a failure to converge.
class InteriorPoint {
 public:
  struct Options {
    int max_iterations = 200;
    double primal_tol = 1e-9;
    double dual_tol = 1e-9;
    double gap_tol = 1e-10;
    double step_fraction = 0.995;
    int equilibration_passes = 10;
    bool verbose = false;
  };

  InteriorPoint() = default;
  explicit InteriorPoint(Options opt) : opt_(opt) {}

  Result solve(const Model& model) const;
  Result solve(const Model& model, std::span<const double> lo, std::span<const double> hi) const;

 private:
  Options opt_;
};

}  // namespace mfrr::lp
