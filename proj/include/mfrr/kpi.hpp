#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfrr/bidding.hpp"
#include "mfrr/market.hpp"
#include "mfrr/profit.hpp"
#include "mfrr/virtual_battery.hpp"

namespace mfrr::kpi {

struct KpiPanel {
  std::string mode;
  std::string price_day;
  std::string scenario_hash;
  bidding::RiskParams risk;
  double fee_eur_mwh = 0.0;

  ProfitBreakdown expected;
  double cvar_eur = 0.0;       // lower-tail mean at risk.alpha
  double objective_eur = 0.0;  // (1 - beta) expected total + beta cvar
  std::vector<double> scenario_profit_eur;
  std::vector<ProfitBreakdown> scenarios;
};

/// Replays `sol` over the scenario set. The tail mean uses the sorted,
/// fractionally weighted estimator.
KpiPanel evaluate(const bidding::BidSolution& sol, std::span<const market::MarketScenario> scenarios,
                  const market::DayAheadPrices& da, const bidding::RiskParams& risk, double fee,
                  std::string_view price_day = "");

struct Delta {
  std::string name;
  double a = 0.0, b = 0.0;
  double delta() const { return b - a; }
};

/// b relative to a. expected_improves and objective_improves are weak
/// (b >= a - 1e-6); the volume and CVaR flags are strict.
struct Comparison {
  std::string mode_a, mode_b, price_day, scenario_hash;
  std::vector<Delta> deltas;
  bool objective_improves = false;
  bool expected_improves = false;
  bool cvar_improves = false;
  bool da_volume_decreases = false;
  bool mfrr_dn_volume_increases = false;
};

/// Throws InputError when the panels were computed on different scenario
/// sets or price days.
Comparison compare(const KpiPanel& a, const KpiPanel& b);

std::string to_json(const KpiPanel& p);
KpiPanel panel_from_json(std::string_view text);
std::string to_json(const Comparison& c);

/// One row per panel, columns in the order: total, CVaR, day-ahead, up,
/// down and imbalance contributions, then the five volumes.
std::string to_csv(std::span<const KpiPanel> panels);

/// Per-QH trace: prices, envelopes, first-stage series, activation
/// frequencies and scenario means of charging and imbalance.
std::string trace_csv(const bidding::BidSolution& sol, const vb::VirtualBattery& vb,
                      std::span<const market::MarketScenario> scenarios, const market::DayAheadPrices& da);

}  // namespace mfrr::kpi
