#include "mfrr/profit.hpp"

#include <cmath>
#include <string>

#include "mfrr/common.hpp"

namespace mfrr {

using market::RegulationState;

ProfitBreakdown& ProfitBreakdown::add_scaled(const ProfitBreakdown& o, double w) {
  da_eur += w * o.da_eur;
  mfrr_up_eur += w * o.mfrr_up_eur;
  mfrr_dn_eur += w * o.mfrr_dn_eur;
  imbalance_eur += w * o.imbalance_eur;
  total_eur += w * o.total_eur;
  da_mwh += w * o.da_mwh;
  mfrr_up_mwh += w * o.mfrr_up_mwh;
  mfrr_dn_mwh += w * o.mfrr_dn_mwh;
  imbalance_up_mwh += w * o.imbalance_up_mwh;
  imbalance_dn_mwh += w * o.imbalance_dn_mwh;
  return *this;
}

double settlement_price(const market::MarketScenario& s, const market::DayAheadPrices& da, int t) {
  switch (s.states[t]) {
    case RegulationState::Up: return s.price_up_eur_mwh[t];
    case RegulationState::Down: return s.price_dn_eur_mwh[t];
    case RegulationState::None: break;
  }
  return da.eur_mwh[t];
}

ProfitBreakdown settle(std::span<const double> p_da_mw, std::span<const int> bid_up_mw,
                       std::span<const int> bid_dn_mw, std::span<const double> charging_mw,
                       const market::MarketScenario& s, const market::DayAheadPrices& da, double fee) {
  const std::size_t T = da.eur_mwh.size();
  if (p_da_mw.size() != T || bid_up_mw.size() != T || bid_dn_mw.size() != T || charging_mw.size() != T ||
      s.states.size() != T)
    throw InputError("settle: series lengths do not match the horizon");
  ProfitBreakdown b;
  for (std::size_t i = 0; i < T; ++i) {
    const int t = static_cast<int>(i);
    const bool up = s.states[i] == RegulationState::Up, dn = s.states[i] == RegulationState::Down;
    if (up && !std::isfinite(s.price_up_eur_mwh[i]))
      throw InputError("settle: up activation without a price at qh " + std::to_string(t));
    if (dn && !std::isfinite(s.price_dn_eur_mwh[i]))
      throw InputError("settle: down activation without a price at qh " + std::to_string(t));
    const double e_da = kQhHours * p_da_mw[i];
    const double e_up = up ? kQhHours * bid_up_mw[i] : 0.0;
    const double e_dn = dn ? kQhHours * bid_dn_mw[i] : 0.0;
    const double imb = kQhHours * charging_mw[i] - (e_da - e_up + e_dn);
    const double lam = settlement_price(s, da, t);

    b.da_eur -= e_da * da.eur_mwh[i];
    if (up) b.mfrr_up_eur += e_up * s.price_up_eur_mwh[i];
    if (dn) b.mfrr_dn_eur -= e_dn * s.price_dn_eur_mwh[i];
    b.imbalance_eur -= imb * lam + fee * std::abs(imb);

    b.da_mwh += e_da;
    b.mfrr_up_mwh += e_up;
    b.mfrr_dn_mwh += e_dn;
    if (imb > 0) b.imbalance_dn_mwh += imb;
    else b.imbalance_up_mwh -= imb;
  }
  b.total_eur = b.da_eur + b.mfrr_up_eur + b.mfrr_dn_eur + b.imbalance_eur;
  return b;
}

}  // namespace mfrr
