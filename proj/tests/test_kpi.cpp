#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mfrr/common.hpp"
#include "mfrr/kpi.hpp"
#include "oracles.hpp"

using namespace mfrr;

namespace {

struct Instance {
  vb::VirtualBattery vb;
  market::DayAheadPrices da;
  std::vector<market::MarketScenario> sc;
};

Instance desk(int n_vehicles, int n_scenarios, std::uint64_t seed) {
  fleet::FleetSpec spec;
  spec.n_vehicles = n_vehicles;
  spec.rng_seed = seed;
  Instance x;
  x.vb = vb::build_envelopes(fleet::sample_fleet(spec), 96);
  x.da = market::synthetic_day_ahead("duck_curve");
  const auto cal = market::bundled_defaults();
  x.sc = market::sample_scenarios(cal.chain, cal.premia, x.da, n_scenarios, seed + 1);
  return x;
}

double internal_cvar(const bidding::BidSolution& s, std::span<const market::MarketScenario> sc) {
  double tail = 0.0;
  for (std::size_t w = 0; w < sc.size(); ++w) tail += sc[w].weight * s.eta_eur[w];
  return s.zeta_eur - tail / (1.0 - s.risk.alpha);
}

bidding::SolveOptions loose() {
  bidding::SolveOptions o;
  o.rel_gap = 1e-3;
  return o;
}

}  // namespace

TEST(Kpi, SingleScenarioPanel) {
  auto x = desk(30, 1, 2);
  const auto sol = bidding::solve_cooptimized(x.vb, x.sc, x.da, {}, 1.0, loose());
  const auto p = kpi::evaluate(sol, x.sc, x.da, {}, 1.0);
  ASSERT_EQ(p.scenarios.size(), 1u);
  EXPECT_DOUBLE_EQ(p.expected.total_eur, p.scenario_profit_eur[0]);
  EXPECT_DOUBLE_EQ(p.cvar_eur, p.scenario_profit_eur[0]);
  EXPECT_NEAR(p.objective_eur, p.expected.total_eur, 1e-9);
}

TEST(Kpi, BreakdownAddsUpAndVolumesBalance) {
  auto x = desk(150, 25, 6);
  const auto sol = bidding::solve_cooptimized(x.vb, x.sc, x.da, {}, 1.0, loose());
  const auto p = kpi::evaluate(sol, x.sc, x.da, {}, 1.0, "duck_curve");
  const double energy = x.vb.total_energy_mwh();
  auto check = [&](const ProfitBreakdown& b) {
    EXPECT_NEAR(b.total_eur, b.da_eur + b.mfrr_up_eur + b.mfrr_dn_eur + b.imbalance_eur, 1e-6);
    EXPECT_NEAR(b.da_mwh - b.mfrr_up_mwh + b.mfrr_dn_mwh - b.imbalance_up_mwh + b.imbalance_dn_mwh, energy, 1e-6);
  };
  for (const auto& b : p.scenarios) check(b);
  check(p.expected);
  EXPECT_NEAR(p.expected.total_eur, sol.expected_profit_eur, 1e-6);
  EXPECT_NEAR(p.cvar_eur, sol.cvar_eur, 1e-6);
  EXPECT_NEAR(p.objective_eur, sol.objective_eur, 1e-6);
  EXPECT_EQ(p.price_day, "duck_curve");
  EXPECT_EQ(p.scenario_hash, market::scenario_set_hash(x.sc));
}

TEST(Kpi, ReplayOnThousandScenariosMatchesInternalTail) {
  auto x = desk(80, 30, 11);
  const auto sol = bidding::solve_cooptimized(x.vb, x.sc, x.da, {0.4, 0.95}, 1.0, loose());
  const auto cal = market::bundled_defaults();
  const auto big = market::sample_scenarios(cal.chain, cal.premia, x.da, 1000, 99);
  const auto replay = bidding::evaluate_first_stage(x.vb, big, x.da, sol.risk, 1.0, sol.p_da_mw, sol.bid_up_mw,
                                                    sol.bid_dn_mw, bidding::Mode::Cooptimized);
  const auto p = kpi::evaluate(replay, big, x.da, sol.risk, 1.0);
  EXPECT_NEAR(p.cvar_eur, internal_cvar(replay, big), 1e-6);
  EXPECT_NEAR(p.cvar_eur, oracle::tail_mean(p.scenario_profit_eur, 0.95), 1e-6);
}

TEST(Kpi, CompareSelfIsNeutral) {
  auto x = desk(40, 8, 3);
  const auto sol = bidding::solve_independent(x.vb, x.sc, x.da, {}, 1.0, loose());
  const auto p = kpi::evaluate(sol, x.sc, x.da, {}, 1.0);
  const auto c = kpi::compare(p, p);
  for (const auto& d : c.deltas) EXPECT_EQ(d.delta(), 0.0) << d.name;
  EXPECT_TRUE(c.objective_improves);
  EXPECT_TRUE(c.expected_improves);
  EXPECT_FALSE(c.cvar_improves);
  EXPECT_FALSE(c.da_volume_decreases);
  EXPECT_FALSE(c.mfrr_dn_volume_increases);
}

TEST(Kpi, CompareRejectsMismatchedSets) {
  auto x = desk(40, 8, 3);
  const auto sol = bidding::solve_independent(x.vb, x.sc, x.da, {}, 1.0, loose());
  const auto a = kpi::evaluate(sol, x.sc, x.da, {}, 1.0, "duck_curve");
  auto b = a;
  b.scenario_hash = "0000";
  EXPECT_THROW(kpi::compare(a, b), InputError);
  b = a;
  b.price_day = "double_peak";
  EXPECT_THROW(kpi::compare(a, b), InputError);
}

TEST(Kpi, EvaluateRejectsBadInput) {
  auto x = desk(20, 4, 1);
  const auto sol = bidding::solve_independent(x.vb, x.sc, x.da, {}, 1.0, loose());
  EXPECT_THROW(kpi::evaluate(sol, {}, x.da, {}, 1.0), InputError);
  auto more = x.sc;
  more.push_back(more.front());
  EXPECT_THROW(kpi::evaluate(sol, more, x.da, {}, 1.0), InputError);
}

TEST(Kpi, PanelJsonRoundTrip) {
  auto x = desk(80, 30, 4);
  const auto sol = bidding::solve_cooptimized(x.vb, x.sc, x.da, {}, 1.0, loose());
  const auto p = kpi::evaluate(sol, x.sc, x.da, {}, 1.0, "duck_curve");
  const auto back = kpi::panel_from_json(kpi::to_json(p));
  EXPECT_EQ(back.mode, p.mode);
  EXPECT_EQ(back.scenario_hash, p.scenario_hash);
  EXPECT_EQ(back.cvar_eur, p.cvar_eur);
  EXPECT_EQ(back.expected.total_eur, p.expected.total_eur);
  EXPECT_EQ(back.scenario_profit_eur, p.scenario_profit_eur);
  EXPECT_EQ(kpi::to_json(back), kpi::to_json(p));
}

TEST(Kpi, CsvAndTraceLayout) {
  auto x = desk(80, 30, 4);
  const auto sol = bidding::solve_cooptimized(x.vb, x.sc, x.da, {}, 1.0, loose());
  const auto p = kpi::evaluate(sol, x.sc, x.da, {}, 1.0, "duck_curve");
  const std::vector<kpi::KpiPanel> panels{p, p};
  std::istringstream csv(kpi::to_csv(panels));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line,
            "mode,price_day,total_profit_eur,cvar_eur,da_eur,mfrr_up_eur,mfrr_dn_eur,imbalance_eur,da_mwh,"
            "mfrr_up_mwh,mfrr_dn_mwh,imbalance_up_mwh,imbalance_dn_mwh");
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 2);

  std::istringstream trace(kpi::trace_csv(sol, x.vb, x.sc, x.da));
  std::getline(trace, line);
  EXPECT_EQ(line.rfind("qh,lambda_da,", 0), 0u);
  rows = 0;
  while (std::getline(trace, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 96);
}
