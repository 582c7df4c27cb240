#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfrr/lp/model.hpp"
#include "mfrr/market.hpp"
#include "mfrr/profit.hpp"
#include "mfrr/virtual_battery.hpp"

namespace mfrr::bidding {

struct RiskParams {
  double beta = 0.4;   // weight of CVaR in the objective
  double alpha = 0.95; // CVaR confidence level
};

void validate(const RiskParams& r);

enum class Mode { Independent, Cooptimized };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);

struct BidSolution {
  Mode mode = Mode::Cooptimized;
  std::vector<double> p_da_mw;
  std::vector<double> c_base_mw;
  std::vector<int> bid_up_mw;
  std::vector<int> bid_dn_mw;
  /// Uninstructed deviation per scenario and QH (MW).
  std::vector<std::vector<double>> x_mw;

  double objective_eur = 0.0;  // (1 - beta) E[profit] + beta CVaR
  double expected_profit_eur = 0.0;
  /// Rockafellar-Uryasev auxiliaries at the returned point: zeta maximizes
  /// zeta - E[(zeta - profit)+] / (1 - alpha) and eta_w = (zeta - profit_w)+.
  double zeta_eur = 0.0;
  std::vector<double> eta_eur;
  double cvar_eur = 0.0;  // the maximized value above

  double bound_eur = 0.0;  // proven upper bound on the optimal objective
  double gap = 0.0;        // (bound - objective) / max(1, |objective|)
  long nodes = 0;
  bool time_limit_hit = false;
  std::string engine;
  RiskParams risk;
  double fee_eur_mwh = 0.0;
};

/// c = c_base - bid_up [Up] + bid_dn [Down] + x for scenario `w`. Throws
/// InfeasibleError if the result leaves [0, p_max] by more than 1e-6 MW.
std::vector<double> realized_charging(const BidSolution& sol, std::size_t w, const market::MarketScenario& s,
                                      const vb::VirtualBattery* vb = nullptr);

ProfitBreakdown scenario_profit(const BidSolution& sol, std::size_t w, const market::MarketScenario& s,
                                const market::DayAheadPrices& da, double fee);

/// Lower-tail CVaR of a weighted sample: mean of the worst (1 - alpha)
/// probability mass, splitting the boundary scenario fractionally. alpha = 1
/// gives the minimum.
double cvar_sorted(std::span<const double> profits, std::span<const double> weights, double alpha);

/// max over zeta of zeta - sum w (zeta - profit)+ / (1 - alpha), attained at
/// one of the sample points; returns {value, zeta}.
std::pair<double, double> cvar_rockafellar_uryasev(std::span<const double> profits, std::span<const double> weights,
                                                   double alpha);

enum class Engine { Auto, Simplex, InteriorPoint };

struct SolveOptions {
  Engine engine = Engine::Auto;
  /// Auto uses the dense simplex up to this many rows.
  int simplex_max_rows = 1200;
  double time_limit_s = 120.0;
  double rel_gap = 1e-4;
  double abs_gap = 1e-6;
  long max_nodes = 100000;
  bool verbose = false;
};

/// Cheapest envelope-feasible charging under the day-ahead prices (ties to
/// earlier QHs).
std::vector<double> day_ahead_plan(const vb::VirtualBattery& vb, const market::DayAheadPrices& da);

/// Completes a first-stage decision: best recourse per scenario, baseline
/// plan, profits and risk terms. `p_da`, bids must respect the bounds and
/// buffer rows.
BidSolution evaluate_first_stage(const vb::VirtualBattery& vb, std::span<const market::MarketScenario> scenarios,
                                 const market::DayAheadPrices& da, const RiskParams& risk, double fee,
                                 std::span<const double> p_da, std::span<const int> bid_up,
                                 std::span<const int> bid_dn, Mode mode);

BidSolution solve_independent(const vb::VirtualBattery& vb, std::span<const market::MarketScenario> scenarios,
                              const market::DayAheadPrices& da, const RiskParams& risk, double fee,
                              const SolveOptions& opt = {});

/// Seeds the search with the independent solution, so the result is never
/// worse than it.
BidSolution solve_cooptimized(const vb::VirtualBattery& vb, std::span<const market::MarketScenario> scenarios,
                              const market::DayAheadPrices& da, const RiskParams& risk, double fee,
                              const SolveOptions& opt = {});

/// Same, with an explicit starting solution (its first stage must be
/// feasible here).
BidSolution solve_cooptimized(const vb::VirtualBattery& vb, std::span<const market::MarketScenario> scenarios,
                              const market::DayAheadPrices& da, const RiskParams& risk, double fee,
                              const SolveOptions& opt, const BidSolution& start);

/// The mixed-integer model. Columns: p_da[T], bid_up[T], bid_dn[T], then
/// zeta (when beta > 0), then per scenario cumulative energy s[T], imbalance
/// parts i+[T], i-[T] and (when beta > 0) eta. The objective is the negated
/// risk-weighted profit. `p_da_fixed` pins the day-ahead columns.
struct BiddingModel {
  lp::Model model;
  int T = 0;
  int zeta_col = -1;
  int first_scenario_col = 0;
  int cols_per_scenario = 0;
  int col_p_da(int t) const { return t; }
  int col_up(int t) const { return T + t; }
  int col_dn(int t) const { return 2 * T + t; }
};

BiddingModel build_model(const vb::VirtualBattery& vb, std::span<const market::MarketScenario> scenarios,
                         const market::DayAheadPrices& da, const RiskParams& risk, double fee,
                         std::span<const double> p_da_fixed = {});

std::string solution_to_json(const BidSolution& sol);
BidSolution solution_from_json(std::string_view text);

}  // namespace mfrr::bidding
