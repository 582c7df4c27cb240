#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "mfrr/lp/model.hpp"

namespace mfrr::lp {

/// A feasible point for the integer program and its (minimization) objective.
struct Candidate {
  double objective = kInf;
  std::vector<double> x;
};

struct MipOutcome {
  Status status = Status::NumericalFailure;
  Candidate incumbent;
  double bound = -kInf;  // proven lower bound on the optimum
  double gap = kInf;     // (incumbent - bound) / max(1, |incumbent|)
  long nodes = 0;
  long unresolved_nodes = 0;  // relaxations the engine could not solve
  bool time_limit_hit = false;
};

/// Best-bound branch-and-bound over the integer columns of a Model, using
/// `Engine` (anything with `Result solve(const Model&, span lo, span hi)`)
/// for the relaxations. A heuristic callback may turn a relaxed point into a
/// feasible candidate. Before each relaxation, row activity bounds are
/// checked so engines that cannot certify infeasibility still see only
/// feasible nodes in models whose infeasibility is confined to single rows.
template <class Engine>
class BranchAndBound {
 public:
  struct Options {
    double rel_gap = 1e-4;
    double abs_gap = 1e-9;
    double time_limit_s = 300.0;
    long max_nodes = 1000000;
    double integrality_tol = 1e-6;
    int log_every = 0;  // progress line to stderr every this many nodes
  };
  using Heuristic = std::function<std::optional<Candidate>(const std::vector<double>& relaxed)>;

  BranchAndBound(Engine engine, Options opt) : engine_(std::move(engine)), opt_(opt) {}

  MipOutcome solve(const Model& model, std::optional<Candidate> start = std::nullopt,
                   const Heuristic& heuristic = {}) const {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    MipOutcome out;
    if (start) out.incumbent = *start;

    std::vector<int> int_cols;
    for (int j = 0; j < model.num_cols(); ++j)
      if (model.integer[j]) int_cols.push_back(j);

    struct Node {
      double bound;
      long id;
      std::vector<double> lo, hi;  // bounds of the integer columns
    };
    auto cmp = [](const Node& a, const Node& b) {
      return a.bound != b.bound ? a.bound > b.bound : a.id > b.id;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> open(cmp);
    {
      Node root{-kInf, 0, {}, {}};
      for (int j : int_cols) {
        root.lo.push_back(std::ceil(model.col_lo[j] - opt_.integrality_tol));
        root.hi.push_back(std::floor(model.col_hi[j] + opt_.integrality_tol));
      }
      open.push(std::move(root));
    }
    long next_id = 1;
    double unresolved_bound = kInf;
    std::vector<double> lo = model.col_lo, hi = model.col_hi;

    auto prune_tol = [&](double inc) { return std::max(opt_.abs_gap, opt_.rel_gap * std::abs(inc)); };
    auto offer = [&](Candidate c) {
      if (c.objective < out.incumbent.objective) out.incumbent = std::move(c);
    };

    while (!open.empty()) {
      if (open.top().bound >= out.incumbent.objective - prune_tol(out.incumbent.objective)) break;
      const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
      if (elapsed > opt_.time_limit_s || out.nodes >= opt_.max_nodes) {
        out.time_limit_hit = true;
        break;
      }
      Node node = open.top();
      open.pop();
      ++out.nodes;
      if (opt_.log_every > 0 && out.nodes % opt_.log_every == 1)
        std::fprintf(stderr, "bnb node %ld open %zu bound %.6f incumbent %.6f t %.1fs\n", out.nodes, open.size() + 1,
                     node.bound, out.incumbent.objective, elapsed);

      for (std::size_t k = 0; k < int_cols.size(); ++k) {
        lo[int_cols[k]] = node.lo[k];
        hi[int_cols[k]] = node.hi[k];
      }
      if (!rows_can_hold(model, lo, hi)) continue;
      Result r = engine_.solve(model, lo, hi);
      if (r.status == Status::Infeasible) continue;
      if (r.status != Status::Optimal) {
        // Not explored further; its inherited bound stays in the reported one.
        ++out.unresolved_nodes;
        unresolved_bound = std::min(unresolved_bound, node.bound);
        continue;
      }
      const double nb = std::max(node.bound, r.objective);
      if (nb >= out.incumbent.objective - prune_tol(out.incumbent.objective)) continue;

      int branch = -1;
      double best_frac = opt_.integrality_tol;
      for (std::size_t k = 0; k < int_cols.size(); ++k) {
        const double v = r.x[int_cols[k]];
        const double f = std::abs(v - std::round(v));
        if (f > best_frac + 1e-12) {
          best_frac = f;
          branch = static_cast<int>(k);
        }
      }
      if (branch < 0) {
        Candidate c{r.objective, r.x};
        for (int j : int_cols) c.x[j] = std::round(c.x[j]);
        offer(std::move(c));
        continue;
      }
      if (heuristic)
        if (auto c = heuristic(r.x)) offer(std::move(*c));

      const double v = r.x[int_cols[branch]];
      Node down{nb, next_id++, node.lo, node.hi};
      down.hi[branch] = std::floor(v);
      Node up{nb, next_id++, std::move(node.lo), std::move(node.hi)};
      up.lo[branch] = std::ceil(v);
      open.push(std::move(down));
      open.push(std::move(up));
    }

    out.bound = std::min(open.empty() ? kInf : open.top().bound, out.incumbent.objective);
    out.bound = std::min(out.bound, unresolved_bound);
    if (!std::isfinite(out.incumbent.objective)) {
      out.status = out.time_limit_hit     ? Status::IterationLimit
                   : out.unresolved_nodes ? Status::NumericalFailure
                                          : Status::Infeasible;
      return out;
    }
    out.gap = std::max(0.0, out.incumbent.objective - out.bound) /
              std::max(1.0, std::abs(out.incumbent.objective));
    out.status = out.time_limit_hit ? Status::IterationLimit : Status::Optimal;
    return out;
  }

 private:
  static bool rows_can_hold(const Model& m, const std::vector<double>& lo, const std::vector<double>& hi) {
    for (int i = 0; i < m.num_rows(); ++i) {
      double amin = 0.0, amax = 0.0;
      for (const auto& t : m.rows[i]) {
        if (t.coef > 0) {
          amin += t.coef * lo[t.col];
          amax += t.coef * hi[t.col];
        } else {
          amin += t.coef * hi[t.col];
          amax += t.coef * lo[t.col];
        }
      }
      double scale = 1.0;
      for (double v : {m.row_lo[i], m.row_hi[i], amin, amax})
        if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
      const double tol = 1e-9 * scale;
      if (amin > m.row_hi[i] + tol || amax < m.row_lo[i] - tol) return false;
    }
    return true;
  }

  Engine engine_;
  Options opt_;
};

}  // namespace mfrr::lp
