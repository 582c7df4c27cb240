#include "mfrr/bidding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "mfrr/common.hpp"
#include "mfrr/lp/branch_and_bound.hpp"
#include "mfrr/lp/ipm.hpp"
#include "mfrr/lp/simplex.hpp"

namespace mfrr::bidding {
namespace {

using market::DayAheadPrices;
using market::MarketScenario;
using market::RegulationState;

constexpr double kPowerTol = 1e-6;

bool is_up(const MarketScenario& s, int t) { return s.states[t] == RegulationState::Up; }
bool is_dn(const MarketScenario& s, int t) { return s.states[t] == RegulationState::Down; }

int bid_cap(double p_max) { return static_cast<int>(std::floor(p_max / kBufferFactor + 1e-9)); }

bool worst_case(double alpha) { return alpha >= 1.0 - 1e-12; }

std::vector<double> normalized_weights(std::span<const MarketScenario> scenarios) {
  std::vector<double> w(scenarios.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] = scenarios[i].weight;
  if (!(sum > 0.0)) throw InputError("scenario weights must have a positive sum");
  for (double& v : w) v /= sum;
  return w;
}

void check_inputs(const vb::VirtualBattery& vb, std::span<const MarketScenario> scenarios, const DayAheadPrices& da,
                  const RiskParams& risk, double fee) {
  if (scenarios.empty()) throw InputError("empty scenario set");
  if (auto bad = vb::check_invariants(vb, 1e-9)) throw InputError("envelopes: " + *bad);
  if (static_cast<int>(da.eur_mwh.size()) != vb.horizon_qh)
    throw InputError("day-ahead prices do not match the envelope horizon");
  validate(risk);
  if (!(fee >= 0.0) || !std::isfinite(fee)) throw InputError("imbalance fee must be a finite value >= 0");
  for (std::size_t w = 0; w < scenarios.size(); ++w)
    if (scenarios[w].horizon_qh() != vb.horizon_qh)
      throw InputError("scenario " + std::to_string(w) + " does not match the envelope horizon");
  vb::require_feasible(vb);
}

// Best charging for one scenario given the instructed positions.
std::vector<double> best_recourse(const vb::VirtualBattery& vb, const MarketScenario& s, const DayAheadPrices& da,
                                  double fee, std::span<const double> p_da, std::span<const int> up,
                                  std::span<const int> dn, std::vector<vb::CostSegment>& segs) {
  const int T = vb.horizon_qh;
  segs.clear();
  for (int t = 0; t < T; ++t) {
    const double P = vb.p_max_mw[t];
    const double k = p_da[t] - (is_up(s, t) ? up[t] : 0) + (is_dn(s, t) ? dn[t] : 0);
    const double lam = settlement_price(s, da, t);
    const double a = std::clamp(k, 0.0, P);
    segs.push_back({t, a, lam - fee});
    segs.push_back({t, P - a, lam + fee});
  }
  return vb::min_cost_charging(vb, segs);
}

struct LpEngine {
  std::function<lp::Result(const lp::Model&, std::span<const double>, std::span<const double>)> fn;
  lp::Result solve(const lp::Model& m, std::span<const double> lo, std::span<const double> hi) const {
    return fn(m, lo, hi);
  }
};

LpEngine make_engine(Engine e, const lp::Model& m, const SolveOptions& opt, std::string& name) {
  if (e == Engine::Auto) e = m.num_rows() <= opt.simplex_max_rows ? Engine::Simplex : Engine::InteriorPoint;
  if (e == Engine::Simplex) {
    name = "simplex";
    return {[](const lp::Model& md, std::span<const double> lo, std::span<const double> hi) {
      return lp::DenseSimplex().solve(md, lo, hi);
    }};
  }
  name = "interior_point";
  return {[](const lp::Model& md, std::span<const double> lo, std::span<const double> hi) {
    return lp::InteriorPoint().solve(md, lo, hi);
  }};
}

// Nearest-integer bids within the column bounds, reduced until the buffer
// rows hold.
void round_bids(const BiddingModel& bm, const vb::VirtualBattery& vb, std::span<const double> x,
                std::span<const double> lo, std::span<const double> hi, std::vector<int>& up, std::vector<int>& dn) {
  for (int t = 0; t < bm.T; ++t) {
    up[t] = static_cast<int>(std::clamp(std::round(x[bm.col_up(t)]), lo[bm.col_up(t)], hi[bm.col_up(t)]));
    dn[t] = static_cast<int>(std::clamp(std::round(x[bm.col_dn(t)]), lo[bm.col_dn(t)], hi[bm.col_dn(t)]));
    while (kBufferFactor * (up[t] + dn[t]) > vb.p_max_mw[t] + 1e-9) {
      if (dn[t] > lo[bm.col_dn(t)] && (dn[t] >= up[t] || up[t] <= lo[bm.col_up(t)])) --dn[t];
      else if (up[t] > lo[bm.col_up(t)]) --up[t];
      else break;
    }
  }
}

lp::Candidate as_candidate(const BiddingModel& bm, const BidSolution& sol) {
  lp::Candidate c;
  c.objective = -sol.objective_eur;
  c.x.assign(bm.model.num_cols(), 0.0);
  for (int t = 0; t < bm.T; ++t) {
    c.x[bm.col_p_da(t)] = sol.p_da_mw[t];
    c.x[bm.col_up(t)] = sol.bid_up_mw[t];
    c.x[bm.col_dn(t)] = sol.bid_dn_mw[t];
  }
  return c;
}

// Branch-and-bound over the bids; `p_da_fixed` empty means co-optimised.
BidSolution solve_model(const vb::VirtualBattery& vb, std::span<const MarketScenario> scenarios,
                        const DayAheadPrices& da, const RiskParams& risk, double fee, const SolveOptions& opt,
                        std::span<const double> p_da_fixed, const BidSolution* start, Mode mode) {
  BiddingModel bm = build_model(vb, scenarios, da, risk, fee, p_da_fixed);
  const int T = bm.T;
  std::string engine_name;
  LpEngine engine = make_engine(opt.engine, bm.model, opt, engine_name);

  auto evaluate = [&](std::span<const double> p_da, const std::vector<int>& up, const std::vector<int>& dn) {
    std::vector<double> pd(p_da.begin(), p_da.end());
    for (int t = 0; t < T; ++t) pd[t] = std::clamp(pd[t], 0.0, vb.p_max_mw[t]);
    return evaluate_first_stage(vb, scenarios, da, risk, fee, pd, up, dn, mode);
  };

  std::optional<lp::Candidate> seed;
  BidSolution best;
  bool have_best = false;
  if (start) {
    best = evaluate(start->p_da_mw, start->bid_up_mw, start->bid_dn_mw);
    have_best = true;
    seed = as_candidate(bm, best);
  }

  int polishes = 0;
  auto heuristic = [&](const std::vector<double>& xr) -> std::optional<lp::Candidate> {
    std::vector<int> up(T), dn(T);
    round_bids(bm, vb, xr, bm.model.col_lo, bm.model.col_hi, up, dn);
    std::vector<double> p_da(T);
    for (int t = 0; t < T; ++t) p_da[t] = xr[bm.col_p_da(t)];
    BidSolution cand = evaluate(p_da, up, dn);
    if (polishes < 2) {
      // Re-optimize the continuous first stage with the rounded bids fixed.
      ++polishes;
      std::vector<double> lo = bm.model.col_lo, hi = bm.model.col_hi;
      for (int t = 0; t < T; ++t) {
        lo[bm.col_up(t)] = hi[bm.col_up(t)] = up[t];
        lo[bm.col_dn(t)] = hi[bm.col_dn(t)] = dn[t];
      }
      lp::Result r = engine.solve(bm.model, lo, hi);
      if (r.status == lp::Status::Optimal) {
        for (int t = 0; t < T; ++t) p_da[t] = r.x[bm.col_p_da(t)];
        BidSolution polished = evaluate(p_da, up, dn);
        if (polished.objective_eur > cand.objective_eur) cand = std::move(polished);
      }
    }
    if (!have_best || cand.objective_eur > best.objective_eur) {
      best = cand;
      have_best = true;
    }
    return as_candidate(bm, cand);
  };

  lp::BranchAndBound<LpEngine>::Options bo;
  bo.rel_gap = opt.rel_gap;
  bo.abs_gap = opt.abs_gap;
  bo.time_limit_s = opt.time_limit_s;
  bo.max_nodes = opt.max_nodes;
  bo.log_every = opt.verbose ? 25 : 0;
  lp::BranchAndBound<LpEngine> bnb(engine, bo);
  lp::MipOutcome out = bnb.solve(bm.model, seed, heuristic);
  if (out.status == lp::Status::Infeasible)
    throw InfeasibleError("bidding model is infeasible");
  if (!std::isfinite(out.incumbent.objective))
    throw std::runtime_error("bidding: no feasible solution found within the limits");

  // The incumbent may come from an integral relaxation; settle it exactly and
  // keep whichever exact evaluation is better.
  const auto& x = out.incumbent.x;
  std::vector<int> up(T), dn(T);
  std::vector<double> p_da(T);
  for (int t = 0; t < T; ++t) {
    p_da[t] = x[bm.col_p_da(t)];
    up[t] = static_cast<int>(std::lround(x[bm.col_up(t)]));
    dn[t] = static_cast<int>(std::lround(x[bm.col_dn(t)]));
  }
  BidSolution sol = evaluate(p_da, up, dn);
  if (have_best && best.objective_eur > sol.objective_eur) sol = std::move(best);

  sol.bound_eur = std::max(-out.bound, sol.objective_eur);
  sol.gap = (sol.bound_eur - sol.objective_eur) / std::max(1.0, std::abs(sol.objective_eur));
  sol.nodes = out.nodes;
  sol.time_limit_hit = out.time_limit_hit;
  sol.engine = engine_name;
  if (opt.verbose)
    std::fprintf(stderr, "bidding[%s] engine=%s nodes=%ld unresolved=%ld objective=%.6f bound=%.6f gap=%.2e%s\n",
                 std::string(to_string(mode)).c_str(), engine_name.c_str(), sol.nodes, out.unresolved_nodes,
                 sol.objective_eur, sol.bound_eur, sol.gap, sol.time_limit_hit ? " (limit hit)" : "");
  return sol;
}

}  // namespace

void validate(const RiskParams& r) {
  if (!(r.beta >= 0.0 && r.beta <= 1.0)) throw InputError("beta must lie in [0,1]");
  if (!(r.alpha >= 0.0 && r.alpha <= 1.0)) throw InputError("alpha must lie in [0,1]");
}

std::string_view to_string(Mode m) { return m == Mode::Independent ? "independent" : "cooptimized"; }

Mode parse_mode(std::string_view s) {
  if (s == "independent") return Mode::Independent;
  if (s == "cooptimized" || s == "cooptimised") return Mode::Cooptimized;
  throw InputError("unknown mode '" + std::string(s) + "'");
}

std::vector<double> realized_charging(const BidSolution& sol, std::size_t w, const MarketScenario& s,
                                      const vb::VirtualBattery* vb) {
  const std::size_t T = sol.c_base_mw.size();
  if (w >= sol.x_mw.size() || sol.x_mw[w].size() != T || s.states.size() != T || sol.bid_up_mw.size() != T ||
      sol.bid_dn_mw.size() != T)
    throw InputError("realized_charging: lengths do not match");
  std::vector<double> c(T);
  for (std::size_t t = 0; t < T; ++t) {
    const int ti = static_cast<int>(t);
    c[t] = sol.c_base_mw[t] - (is_up(s, ti) ? sol.bid_up_mw[t] : 0) + (is_dn(s, ti) ? sol.bid_dn_mw[t] : 0) +
           sol.x_mw[w][t];
    if (c[t] < -kPowerTol || (vb && c[t] > vb->p_max_mw[t] + kPowerTol))
      throw InfeasibleError("realized charging leaves [0, p_max] in scenario " + std::to_string(w) + " at qh " +
                                std::to_string(t),
                            ti);
  }
  return c;
}

ProfitBreakdown scenario_profit(const BidSolution& sol, std::size_t w, const MarketScenario& s,
                                const DayAheadPrices& da, double fee) {
  const auto c = realized_charging(sol, w, s);
  return settle(sol.p_da_mw, sol.bid_up_mw, sol.bid_dn_mw, c, s, da, fee);
}

double cvar_sorted(std::span<const double> profits, std::span<const double> weights, double alpha) {
  if (profits.empty() || profits.size() != weights.size()) throw InputError("cvar: bad sample");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> order(profits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return profits[a] < profits[b]; });
  const double mass = 1.0 - alpha;
  if (mass <= 1e-15) return profits[order.front()];
  double acc = 0.0, sum = 0.0;
  for (std::size_t i : order) {
    const double take = std::min(weights[i] / total, mass - acc);
    if (take <= 0.0) break;
    sum += take * profits[i];
    acc += take;
  }
  return sum / acc;
}

std::pair<double, double> cvar_rockafellar_uryasev(std::span<const double> profits, std::span<const double> weights,
                                                   double alpha) {
  if (profits.empty() || profits.size() != weights.size()) throw InputError("cvar: bad sample");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (worst_case(alpha)) {
    const double m = *std::min_element(profits.begin(), profits.end());
    return {m, m};
  }
  std::vector<double> z(profits.begin(), profits.end());
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end()), z.end());
  double best = -lp::kInf, best_zeta = z.front();
  for (double zeta : z) {
    double tail = 0.0;
    for (std::size_t i = 0; i < profits.size(); ++i) tail += weights[i] / total * std::max(0.0, zeta - profits[i]);
    const double v = zeta - tail / (1.0 - alpha);
    if (v > best) {
      best = v;
      best_zeta = zeta;
    }
  }
  return {best, best_zeta};
}

std::vector<double> day_ahead_plan(const vb::VirtualBattery& vb, const DayAheadPrices& da) {
  return vb::min_cost_charging(vb, da.eur_mwh);
}

BidSolution evaluate_first_stage(const vb::VirtualBattery& vb, std::span<const MarketScenario> scenarios,
                                 const DayAheadPrices& da, const RiskParams& risk, double fee,
                                 std::span<const double> p_da, std::span<const int> bid_up,
                                 std::span<const int> bid_dn, Mode mode) {
  const int T = vb.horizon_qh;
  if (static_cast<int>(p_da.size()) != T || static_cast<int>(bid_up.size()) != T ||
      static_cast<int>(bid_dn.size()) != T)
    throw InputError("first-stage series do not match the horizon");
  for (int t = 0; t < T; ++t) {
    const double P = vb.p_max_mw[t];
    if (p_da[t] < -kPowerTol || p_da[t] > P + kPowerTol)
      throw InputError("day-ahead position outside [0, p_max] at qh " + std::to_string(t));
    if (bid_up[t] < 0 || bid_dn[t] < 0) throw InputError("negative bid at qh " + std::to_string(t));
    if (kBufferFactor * (bid_up[t] + bid_dn[t]) > P + 1e-9)
      throw InputError("bids exceed the buffered capacity at qh " + std::to_string(t));
  }
  const auto w = normalized_weights(scenarios);

  BidSolution sol;
  sol.mode = mode;
  sol.risk = risk;
  sol.fee_eur_mwh = fee;
  sol.p_da_mw.assign(p_da.begin(), p_da.end());
  sol.bid_up_mw.assign(bid_up.begin(), bid_up.end());
  sol.bid_dn_mw.assign(bid_dn.begin(), bid_dn.end());
  sol.c_base_mw.resize(T);
  for (int t = 0; t < T; ++t)
    sol.c_base_mw[t] = std::clamp(p_da[t], kBufferFactor * bid_up[t], vb.p_max_mw[t] - kBufferFactor * bid_dn[t]);

  std::vector<double> profits(scenarios.size());
  std::vector<vb::CostSegment> segs;
  sol.x_mw.resize(scenarios.size());
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    const auto& s = scenarios[k];
    const auto c = best_recourse(vb, s, da, fee, p_da, bid_up, bid_dn, segs);
    auto& x = sol.x_mw[k];
    x.resize(T);
    for (int t = 0; t < T; ++t)
      x[t] = c[t] - sol.c_base_mw[t] + (is_up(s, t) ? bid_up[t] : 0) - (is_dn(s, t) ? bid_dn[t] : 0);
    const ProfitBreakdown b = settle(p_da, bid_up, bid_dn, c, s, da, fee);
    profits[k] = b.total_eur;
    sol.expected_profit_eur += w[k] * b.total_eur;
  }
  const auto [cvar, zeta] = cvar_rockafellar_uryasev(profits, w, risk.alpha);
  sol.cvar_eur = cvar;
  sol.zeta_eur = zeta;
  sol.eta_eur.resize(profits.size());
  for (std::size_t k = 0; k < profits.size(); ++k) sol.eta_eur[k] = std::max(0.0, zeta - profits[k]);
  sol.objective_eur = (1.0 - risk.beta) * sol.expected_profit_eur + risk.beta * cvar;
  return sol;
}

BiddingModel build_model(const vb::VirtualBattery& vb, std::span<const MarketScenario> scenarios,
                         const DayAheadPrices& da, const RiskParams& risk, double fee,
                         std::span<const double> p_da_fixed) {
  const int T = vb.horizon_qh;
  const auto w = normalized_weights(scenarios);
  const double dt = kQhHours;
  const double beta = risk.beta, alpha = risk.alpha;
  const bool with_cvar = beta > 0.0;

  BiddingModel bm;
  bm.T = T;
  lp::Model& m = bm.model;

  std::vector<char> any_up(T, 0), any_dn(T, 0);
  for (const auto& s : scenarios)
    for (int t = 0; t < T; ++t) {
      any_up[t] |= is_up(s, t);
      any_dn[t] |= is_dn(s, t);
    }

  // First stage. Profit terms shared by all scenarios carry weight 1 - beta
  // directly; inside the CVaR rows they appear per scenario.
  for (int t = 0; t < T; ++t) {
    double lo = 0.0, hi = vb.p_max_mw[t];
    if (!p_da_fixed.empty()) lo = hi = std::clamp(p_da_fixed[t], 0.0, vb.p_max_mw[t]);
    m.add_col((1.0 - beta) * dt * da.eur_mwh[t], lo, hi);
  }
  for (int t = 0; t < T; ++t) m.add_col(0.0, 0.0, any_up[t] ? bid_cap(vb.p_max_mw[t]) : 0.0, true);
  for (int t = 0; t < T; ++t) m.add_col(0.0, 0.0, any_dn[t] ? bid_cap(vb.p_max_mw[t]) : 0.0, true);
  for (int t = 0; t < T; ++t)
    if (any_up[t] && any_dn[t] && m.col_hi[bm.col_up(t)] > 0 && m.col_hi[bm.col_dn(t)] > 0)
      m.add_row(-lp::kInf, vb.p_max_mw[t], {{bm.col_up(t), kBufferFactor}, {bm.col_dn(t), kBufferFactor}});
  if (with_cvar) bm.zeta_col = m.add_col(-beta, -lp::kInf, lp::kInf);

  bm.first_scenario_col = m.num_cols();
  const double tail = worst_case(alpha) ? 0.0 : 1.0 / (1.0 - alpha);
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    const auto& s = scenarios[k];
    const int s0 = m.num_cols();
    for (int t = 0; t < T; ++t) {
      double lo = vb.e_min_mwh[t + 1], hi = vb.e_max_mwh[t + 1];
      if (t == 0) hi = std::min(hi, dt * vb.p_max_mw[0]);
      if (t == T - 1) lo = hi = vb.e_max_mwh[T];
      m.add_col(0.0, lo, hi);
    }
    const int ip0 = m.num_cols();
    std::vector<double> lam(T);
    for (int t = 0; t < T; ++t) lam[t] = settlement_price(s, da, t);
    for (int t = 0; t < T; ++t) m.add_col((1.0 - beta) * w[k] * dt * (lam[t] + fee), 0.0, 2.0 * vb.p_max_mw[t]);
    const int im0 = m.num_cols();
    for (int t = 0; t < T; ++t) m.add_col(-(1.0 - beta) * w[k] * dt * (lam[t] - fee), 0.0, 2.0 * vb.p_max_mw[t]);
    // Bid revenues are scenario-specific; fold their expectation into the
    // first-stage costs.
    for (int t = 0; t < T; ++t) {
      if (is_up(s, t)) m.obj[bm.col_up(t)] -= (1.0 - beta) * w[k] * dt * s.price_up_eur_mwh[t];
      if (is_dn(s, t)) m.obj[bm.col_dn(t)] += (1.0 - beta) * w[k] * dt * s.price_dn_eur_mwh[t];
    }

    for (int t = 0; t < T; ++t) {
      std::vector<lp::Model::Term> terms{{s0 + t, 1.0}, {bm.col_p_da(t), -dt}, {ip0 + t, -dt}, {im0 + t, dt}};
      if (t > 0) terms.push_back({s0 + t - 1, -1.0});
      if (is_up(s, t)) terms.push_back({bm.col_up(t), dt});
      if (is_dn(s, t)) terms.push_back({bm.col_dn(t), -dt});
      m.add_row(0.0, 0.0, std::move(terms));
      if (t > 0) m.add_row(0.0, dt * vb.p_max_mw[t], {{s0 + t, 1.0}, {s0 + t - 1, -1.0}});
    }

    if (with_cvar) {
      // eta - zeta + profit >= 0 (or profit - zeta >= 0 for the worst case).
      std::vector<lp::Model::Term> terms;
      for (int t = 0; t < T; ++t) {
        terms.push_back({bm.col_p_da(t), -dt * da.eur_mwh[t]});
        if (is_up(s, t)) terms.push_back({bm.col_up(t), dt * s.price_up_eur_mwh[t]});
        if (is_dn(s, t)) terms.push_back({bm.col_dn(t), -dt * s.price_dn_eur_mwh[t]});
        terms.push_back({ip0 + t, -dt * (lam[t] + fee)});
        terms.push_back({im0 + t, dt * (lam[t] - fee)});
      }
      terms.push_back({bm.zeta_col, -1.0});
      if (!worst_case(alpha)) {
        const int eta = m.add_col(beta * tail * w[k], 0.0, lp::kInf);
        terms.push_back({eta, 1.0});
      }
      m.add_row(0.0, lp::kInf, std::move(terms));
    }
    if (k == 0) bm.cols_per_scenario = m.num_cols() - s0;
  }
  return bm;
}

BidSolution solve_independent(const vb::VirtualBattery& vb, std::span<const MarketScenario> scenarios,
                              const DayAheadPrices& da, const RiskParams& risk, double fee,
                              const SolveOptions& opt) {
  check_inputs(vb, scenarios, da, risk, fee);
  const auto plan = day_ahead_plan(vb, da);
  // Starting point: the plan with no bids.
  std::vector<int> zero(vb.horizon_qh, 0);
  BidSolution start = evaluate_first_stage(vb, scenarios, da, risk, fee, plan, zero, zero, Mode::Independent);
  return solve_model(vb, scenarios, da, risk, fee, opt, plan, &start, Mode::Independent);
}

BidSolution solve_cooptimized(const vb::VirtualBattery& vb, std::span<const MarketScenario> scenarios,
                              const DayAheadPrices& da, const RiskParams& risk, double fee,
                              const SolveOptions& opt) {
  const BidSolution ind = solve_independent(vb, scenarios, da, risk, fee, opt);
  return solve_cooptimized(vb, scenarios, da, risk, fee, opt, ind);
}

BidSolution solve_cooptimized(const vb::VirtualBattery& vb, std::span<const MarketScenario> scenarios,
                              const DayAheadPrices& da, const RiskParams& risk, double fee,
                              const SolveOptions& opt, const BidSolution& start) {
  check_inputs(vb, scenarios, da, risk, fee);
  return solve_model(vb, scenarios, da, risk, fee, opt, {}, &start, Mode::Cooptimized);
}

std::string solution_to_json(const BidSolution& sol) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(sol.mode);
  j["risk"] = {{"beta", sol.risk.beta}, {"alpha", sol.risk.alpha}};
  j["fee_eur_mwh"] = sol.fee_eur_mwh;
  j["objective_eur"] = sol.objective_eur;
  j["expected_profit_eur"] = sol.expected_profit_eur;
  j["cvar_eur"] = sol.cvar_eur;
  j["zeta_eur"] = sol.zeta_eur;
  j["bound_eur"] = sol.bound_eur;
  j["gap"] = sol.gap;
  j["nodes"] = sol.nodes;
  j["time_limit_hit"] = sol.time_limit_hit;
  j["engine"] = sol.engine;
  j["first_stage"] = {{"p_da_mw", sol.p_da_mw},
                      {"c_base_mw", sol.c_base_mw},
                      {"bid_up_mw", sol.bid_up_mw},
                      {"bid_dn_mw", sol.bid_dn_mw}};
  nlohmann::ordered_json rec = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < sol.x_mw.size(); ++k) {
    double absdev = 0.0;
    for (double v : sol.x_mw[k]) absdev += std::abs(v);
    rec.push_back({{"scenario", k},
                   {"eta_eur", k < sol.eta_eur.size() ? sol.eta_eur[k] : 0.0},
                   {"abs_deviation_mwh", absdev * kQhHours},
                   {"x_mw", sol.x_mw[k]}});
  }
  j["recourse"] = std::move(rec);
  return j.dump(1) + "\n";
}

BidSolution solution_from_json(std::string_view text) {
  BidSolution sol;
  try {
    const auto j = nlohmann::json::parse(text);
    sol.mode = parse_mode(j.at("mode").get<std::string>());
    sol.risk.beta = j.at("risk").at("beta").get<double>();
    sol.risk.alpha = j.at("risk").at("alpha").get<double>();
    sol.fee_eur_mwh = j.at("fee_eur_mwh").get<double>();
    sol.objective_eur = j.at("objective_eur").get<double>();
    sol.expected_profit_eur = j.at("expected_profit_eur").get<double>();
    sol.cvar_eur = j.at("cvar_eur").get<double>();
    sol.zeta_eur = j.at("zeta_eur").get<double>();
    sol.bound_eur = j.value("bound_eur", sol.objective_eur);
    sol.gap = j.value("gap", 0.0);
    sol.nodes = j.value("nodes", 0L);
    sol.time_limit_hit = j.value("time_limit_hit", false);
    sol.engine = j.value("engine", std::string());
    const auto& f = j.at("first_stage");
    sol.p_da_mw = f.at("p_da_mw").get<std::vector<double>>();
    sol.c_base_mw = f.at("c_base_mw").get<std::vector<double>>();
    sol.bid_up_mw = f.at("bid_up_mw").get<std::vector<int>>();
    sol.bid_dn_mw = f.at("bid_dn_mw").get<std::vector<int>>();
    for (const auto& r : j.at("recourse")) {
      sol.x_mw.push_back(r.at("x_mw").get<std::vector<double>>());
      sol.eta_eur.push_back(r.value("eta_eur", 0.0));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("solution: ") + e.what());
  }
  const std::size_t T = sol.p_da_mw.size();
  if (sol.c_base_mw.size() != T || sol.bid_up_mw.size() != T || sol.bid_dn_mw.size() != T)
    throw InputError("solution: first-stage series differ in length");
  for (const auto& x : sol.x_mw)
    if (x.size() != T) throw InputError("solution: recourse series length mismatch");
  return sol;
}

}  // namespace mfrr::bidding
