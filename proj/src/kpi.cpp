#include "mfrr/kpi.hpp"

#include <cmath>

#include <json.hpp>

#include "mfrr/common.hpp"
#include "mfrr/csv.hpp"

namespace mfrr::kpi {
namespace {

using nlohmann::ordered_json;

constexpr double kWeakTol = 1e-6;

ordered_json breakdown_json(const ProfitBreakdown& b) {
  return {{"total_eur", b.total_eur},
          {"da_eur", b.da_eur},
          {"mfrr_up_eur", b.mfrr_up_eur},
          {"mfrr_dn_eur", b.mfrr_dn_eur},
          {"imbalance_eur", b.imbalance_eur},
          {"da_mwh", b.da_mwh},
          {"mfrr_up_mwh", b.mfrr_up_mwh},
          {"mfrr_dn_mwh", b.mfrr_dn_mwh},
          {"imbalance_up_mwh", b.imbalance_up_mwh},
          {"imbalance_dn_mwh", b.imbalance_dn_mwh}};
}

ProfitBreakdown breakdown_from_json(const nlohmann::json& j) {
  ProfitBreakdown b;
  b.total_eur = j.at("total_eur").get<double>();
  b.da_eur = j.at("da_eur").get<double>();
  b.mfrr_up_eur = j.at("mfrr_up_eur").get<double>();
  b.mfrr_dn_eur = j.at("mfrr_dn_eur").get<double>();
  b.imbalance_eur = j.at("imbalance_eur").get<double>();
  b.da_mwh = j.at("da_mwh").get<double>();
  b.mfrr_up_mwh = j.at("mfrr_up_mwh").get<double>();
  b.mfrr_dn_mwh = j.at("mfrr_dn_mwh").get<double>();
  b.imbalance_up_mwh = j.at("imbalance_up_mwh").get<double>();
  b.imbalance_dn_mwh = j.at("imbalance_dn_mwh").get<double>();
  return b;
}

}  // namespace

KpiPanel evaluate(const bidding::BidSolution& sol, std::span<const market::MarketScenario> scenarios,
                  const market::DayAheadPrices& da, const bidding::RiskParams& risk, double fee,
                  std::string_view price_day) {
  if (scenarios.empty()) throw InputError("kpi: empty scenario set");
  bidding::validate(risk);
  if (sol.x_mw.size() != scenarios.size())
    throw InputError("kpi: solution carries recourse for " + std::to_string(sol.x_mw.size()) +
                     " scenarios, the set has " + std::to_string(scenarios.size()));
  market::validate_scenarios(scenarios, da);

  KpiPanel p;
  p.mode = std::string(bidding::to_string(sol.mode));
  p.price_day = std::string(price_day);
  p.scenario_hash = market::scenario_set_hash(scenarios);
  p.risk = risk;
  p.fee_eur_mwh = fee;

  double total_w = 0.0;
  std::vector<double> w(scenarios.size());
  for (std::size_t k = 0; k < scenarios.size(); ++k) total_w += w[k] = scenarios[k].weight;
  if (!(total_w > 0.0)) throw InputError("kpi: scenario weights must have a positive sum");

  p.scenarios.reserve(scenarios.size());
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    p.scenarios.push_back(bidding::scenario_profit(sol, k, scenarios[k], da, fee));
    p.scenario_profit_eur.push_back(p.scenarios.back().total_eur);
    p.expected.add_scaled(p.scenarios.back(), w[k] / total_w);
  }
  p.cvar_eur = bidding::cvar_sorted(p.scenario_profit_eur, w, risk.alpha);
  p.objective_eur = (1.0 - risk.beta) * p.expected.total_eur + risk.beta * p.cvar_eur;
  return p;
}

Comparison compare(const KpiPanel& a, const KpiPanel& b) {
  if (a.scenario_hash != b.scenario_hash)
    throw InputError("compare: panels were evaluated on different scenario sets (" + a.scenario_hash + " vs " +
                     b.scenario_hash + ")");
  if (a.price_day != b.price_day)
    throw InputError("compare: panels belong to different price days ('" + a.price_day + "' vs '" + b.price_day +
                     "')");
  Comparison c;
  c.mode_a = a.mode;
  c.mode_b = b.mode;
  c.price_day = a.price_day;
  c.scenario_hash = a.scenario_hash;
  const auto& x = a.expected;
  const auto& y = b.expected;
  c.deltas = {{"objective_eur", a.objective_eur, b.objective_eur},
              {"total_profit_eur", x.total_eur, y.total_eur},
              {"cvar_eur", a.cvar_eur, b.cvar_eur},
              {"da_eur", x.da_eur, y.da_eur},
              {"mfrr_up_eur", x.mfrr_up_eur, y.mfrr_up_eur},
              {"mfrr_dn_eur", x.mfrr_dn_eur, y.mfrr_dn_eur},
              {"imbalance_eur", x.imbalance_eur, y.imbalance_eur},
              {"da_mwh", x.da_mwh, y.da_mwh},
              {"mfrr_up_mwh", x.mfrr_up_mwh, y.mfrr_up_mwh},
              {"mfrr_dn_mwh", x.mfrr_dn_mwh, y.mfrr_dn_mwh},
              {"imbalance_up_mwh", x.imbalance_up_mwh, y.imbalance_up_mwh},
              {"imbalance_dn_mwh", x.imbalance_dn_mwh, y.imbalance_dn_mwh}};
  c.objective_improves = b.objective_eur >= a.objective_eur - kWeakTol;
  c.expected_improves = y.total_eur >= x.total_eur - kWeakTol;
  c.cvar_improves = b.cvar_eur > a.cvar_eur;
  c.da_volume_decreases = y.da_mwh < x.da_mwh;
  c.mfrr_dn_volume_increases = y.mfrr_dn_mwh > x.mfrr_dn_mwh;
  return c;
}

std::string to_json(const KpiPanel& p) {
  ordered_json j;
  j["mode"] = p.mode;
  j["price_day"] = p.price_day;
  j["scenario_hash"] = p.scenario_hash;
  j["risk"] = {{"beta", p.risk.beta}, {"alpha", p.risk.alpha}};
  j["fee_eur_mwh"] = p.fee_eur_mwh;
  j["objective_eur"] = p.objective_eur;
  j["cvar_eur"] = p.cvar_eur;
  j["expected"] = breakdown_json(p.expected);
  ordered_json rows = ordered_json::array();
  for (const auto& s : p.scenarios) rows.push_back(breakdown_json(s));
  j["scenarios"] = std::move(rows);
  return j.dump(1) + "\n";
}

KpiPanel panel_from_json(std::string_view text) {
  KpiPanel p;
  try {
    const auto j = nlohmann::json::parse(text);
    p.mode = j.at("mode").get<std::string>();
    p.price_day = j.at("price_day").get<std::string>();
    p.scenario_hash = j.at("scenario_hash").get<std::string>();
    p.risk.beta = j.at("risk").at("beta").get<double>();
    p.risk.alpha = j.at("risk").at("alpha").get<double>();
    p.fee_eur_mwh = j.at("fee_eur_mwh").get<double>();
    p.objective_eur = j.at("objective_eur").get<double>();
    p.cvar_eur = j.at("cvar_eur").get<double>();
    p.expected = breakdown_from_json(j.at("expected"));
    for (const auto& s : j.at("scenarios")) {
      p.scenarios.push_back(breakdown_from_json(s));
      p.scenario_profit_eur.push_back(p.scenarios.back().total_eur);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("kpi panel: ") + e.what());
  }
  return p;
}

std::string to_json(const Comparison& c) {
  ordered_json j;
  j["a"] = c.mode_a;
  j["b"] = c.mode_b;
  j["price_day"] = c.price_day;
  j["scenario_hash"] = c.scenario_hash;
  ordered_json flags;
  flags["objective_improves"] = c.objective_improves;
  flags["expected_improves"] = c.expected_improves;
  flags["cvar_improves"] = c.cvar_improves;
  flags["da_volume_decreases"] = c.da_volume_decreases;
  flags["mfrr_dn_volume_increases"] = c.mfrr_dn_volume_increases;
  j["flags"] = std::move(flags);
  ordered_json d;
  for (const auto& x : c.deltas) d[x.name] = {{"a", x.a}, {"b", x.b}, {"delta", x.delta()}};
  j["deltas"] = std::move(d);
  return j.dump(1) + "\n";
}

std::string to_csv(std::span<const KpiPanel> panels) {
  std::string out =
      "mode,price_day,total_profit_eur,cvar_eur,da_eur,mfrr_up_eur,mfrr_dn_eur,imbalance_eur,"
      "da_mwh,mfrr_up_mwh,mfrr_dn_mwh,imbalance_up_mwh,imbalance_dn_mwh\n";
  for (const auto& p : panels) {
    const auto& e = p.expected;
    out += p.mode + "," + p.price_day;
    for (double v : {e.total_eur, p.cvar_eur, e.da_eur, e.mfrr_up_eur, e.mfrr_dn_eur, e.imbalance_eur, e.da_mwh,
                     e.mfrr_up_mwh, e.mfrr_dn_mwh, e.imbalance_up_mwh, e.imbalance_dn_mwh})
      out += "," + csv::format(v);
    out += "\n";
  }
  return out;
}

std::string trace_csv(const bidding::BidSolution& sol, const vb::VirtualBattery& vb,
                      std::span<const market::MarketScenario> scenarios, const market::DayAheadPrices& da) {
  const int T = vb.horizon_qh;
  if (static_cast<int>(sol.p_da_mw.size()) != T || static_cast<int>(da.eur_mwh.size()) != T)
    throw InputError("trace: horizons do not match");
  if (sol.x_mw.size() != scenarios.size()) throw InputError("trace: solution and scenario set differ in size");

  double total_w = 0.0;
  for (const auto& s : scenarios) total_w += s.weight;
  std::vector<double> p_up(T, 0.0), p_dn(T, 0.0), charge(T, 0.0), imb(T, 0.0), lam_up(T, 0.0), lam_dn(T, 0.0);
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    const auto& s = scenarios[k];
    const double w = s.weight / total_w;
    const auto c = bidding::realized_charging(sol, k, s, &vb);
    for (int t = 0; t < T; ++t) {
      const bool up = s.states[t] == market::RegulationState::Up;
      const bool dn = s.states[t] == market::RegulationState::Down;
      const double instructed = sol.p_da_mw[t] - (up ? sol.bid_up_mw[t] : 0) + (dn ? sol.bid_dn_mw[t] : 0);
      charge[t] += w * c[t];
      imb[t] += w * kQhHours * (c[t] - instructed);
      if (up) {
        p_up[t] += w;
        lam_up[t] += w * s.price_up_eur_mwh[t];
      }
      if (dn) {
        p_dn[t] += w;
        lam_dn[t] += w * s.price_dn_eur_mwh[t];
      }
    }
  }

  std::string out =
      "qh,lambda_da,e_min_mwh,e_max_mwh,p_max_mw,p_da_mw,c_base_mw,bid_up_mw,bid_dn_mw,"
      "prob_up,prob_dn,mean_lambda_up,mean_lambda_dn,mean_charging_mw,mean_imbalance_mwh\n";
  const double nan = std::nan("");
  for (int t = 0; t < T; ++t) {
    out += std::to_string(t);
    for (double v : {da.eur_mwh[t], vb.e_min_mwh[t + 1], vb.e_max_mwh[t + 1], vb.p_max_mw[t], sol.p_da_mw[t],
                     sol.c_base_mw[t]})
      out += "," + csv::format(v);
    out += "," + std::to_string(sol.bid_up_mw[t]) + "," + std::to_string(sol.bid_dn_mw[t]);
    for (double v : {p_up[t], p_dn[t], p_up[t] > 0 ? lam_up[t] / p_up[t] : nan,
                     p_dn[t] > 0 ? lam_dn[t] / p_dn[t] : nan, charge[t], imb[t]})
      out += "," + (std::isnan(v) ? std::string() : csv::format(v));
    out += "\n";
  }
  return out;
}

}  // namespace mfrr::kpi
