#pragma once

#include <span>

#include "mfrr/market.hpp"

namespace mfrr {

/// Cash flows (EUR, revenues positive) and energy volumes (MWh) of one
/// scenario, or their probability-weighted mean.
struct ProfitBreakdown {
  double da_eur = 0.0;
  double mfrr_up_eur = 0.0;
  double mfrr_dn_eur = 0.0;
  double imbalance_eur = 0.0;
  double total_eur = 0.0;

  double da_mwh = 0.0;
  double mfrr_up_mwh = 0.0;
  double mfrr_dn_mwh = 0.0;
  double imbalance_up_mwh = 0.0;  // consumption below the instructed position, sold back
  double imbalance_dn_mwh = 0.0;  // consumption above it, bought

  ProfitBreakdown& add_scaled(const ProfitBreakdown& o, double w);
};

/// Activation-settlement price of QH t: the up price in up regulation, the
/// down price in down regulation, the day-ahead price otherwise.
double settlement_price(const market::MarketScenario& s, const market::DayAheadPrices& da, int t);

/// Settles one scenario: day-ahead purchase of p_da, cleared bids in the
/// activated direction, and the deviation of `charging_mw` from the
/// instructed position at the settlement price plus `fee` per MWh.
ProfitBreakdown settle(std::span<const double> p_da_mw, std::span<const int> bid_up_mw,
                       std::span<const int> bid_dn_mw, std::span<const double> charging_mw,
                       const market::MarketScenario& s, const market::DayAheadPrices& da, double fee);

}  // namespace mfrr
