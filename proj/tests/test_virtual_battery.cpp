#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "mfrr/common.hpp"
#include "mfrr/csv.hpp"
#include "mfrr/virtual_battery.hpp"
#include "oracles.hpp"

using namespace mfrr;

namespace {

std::vector<fleet::EvSession> random_fleet(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n(1, 200);
  fleet::FleetSpec spec;
  spec.n_vehicles = n(rng);
  spec.rng_seed = rng();
  return fleet::sample_fleet(spec);
}

}  // namespace

TEST(VirtualBattery, RandomFleetsMatchPerVehicleOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto sessions = random_fleet(rng);
    const auto vb = vb::build_envelopes(sessions, 96);
    ASSERT_FALSE(vb::check_invariants(vb).has_value()) << *vb::check_invariants(vb);
    for (int t = 0; t <= 96; ++t) {
      EXPECT_NEAR(vb.e_max_mwh[t], oracle::e_max_at(sessions, t), 1e-9);
      EXPECT_NEAR(vb.e_min_mwh[t], oracle::e_min_at(sessions, t), 1e-9);
      if (t < 96) EXPECT_NEAR(vb.p_max_mw[t], oracle::p_max_at(sessions, t), 1e-9);
    }
  }
}

TEST(VirtualBattery, SingleVehicleExample) {
  // 11 kW from QH 4 to QH 12, 5.5 kWh: two full QHs at 2.75 kWh.
  const std::vector<fleet::EvSession> s = {{4, 12, 5.5, 11.0}};
  const auto vb = vb::build_envelopes(s, 16);
  EXPECT_DOUBLE_EQ(vb.e_max_mwh[5], 0.00275);
  EXPECT_DOUBLE_EQ(vb.e_max_mwh[6], 0.0055);
  EXPECT_DOUBLE_EQ(vb.e_min_mwh[10], 0.0);
  EXPECT_DOUBLE_EQ(vb.e_min_mwh[11], 0.00275);
  EXPECT_DOUBLE_EQ(vb.e_min_mwh[12], 0.0055);
  EXPECT_DOUBLE_EQ(vb.p_max_mw[3], 0.0);
  EXPECT_DOUBLE_EQ(vb.p_max_mw[4], 0.011);
  EXPECT_DOUBLE_EQ(vb.total_energy_mwh(), 0.0055);
}

TEST(VirtualBattery, EmptyFleetIsAllZero) {
  const auto vb = vb::build_envelopes({}, 96);
  EXPECT_FALSE(vb::check_invariants(vb).has_value());
  EXPECT_DOUBLE_EQ(vb.total_energy_mwh(), 0.0);
}

TEST(VirtualBattery, RejectsInvalidSessions) {
  EXPECT_THROW(vb::build_envelopes({{10, 5, 1.0, 11.0}}, 96), InputError);
}

TEST(VirtualBattery, ProfilesTrackTheEnvelopes) {
  std::mt19937_64 rng(3);
  const auto vb = vb::build_envelopes(random_fleet(rng), 96);
  const auto late = vb::latest_start_profile(vb);
  const auto early = vb::earliest_start_profile(vb);
  EXPECT_TRUE(vb::is_feasible_trajectory(vb, late).feasible);
  EXPECT_TRUE(vb::is_feasible_trajectory(vb, early).feasible);
}

TEST(VirtualBattery, TrajectoryCheckNamesViolation) {
  const auto vb = vb::build_envelopes({{0, 4, 11.0, 11.0}}, 4);  // must charge flat out
  std::vector<double> c(4, 0.011);
  EXPECT_TRUE(vb::is_feasible_trajectory(vb, c).feasible);
  c[2] = 0.0;
  const auto r = vb::is_feasible_trajectory(vb, c);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.first_violation_qh, 2);
}

TEST(VirtualBattery, RequireFeasibleFlagsBrokenEnvelopes) {
  vb::VirtualBattery vb;
  vb.horizon_qh = 2;
  vb.p_max_mw = {1.0, 1.0};
  vb.e_min_mwh = {0.0, 0.3, 0.4};  // 0.3 MWh in one QH needs 1.2 MW
  vb.e_max_mwh = {0.0, 0.3, 0.4};
  EXPECT_THROW(vb::require_feasible(vb), std::exception);
}

TEST(VirtualBattery, GreedyChargingMatchesLpOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> price(-20.0, 150.0), frac(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 3 + trial % 10;
    const auto vb = oracle::random_battery(rng, T, 0.5, 3.0);
    std::vector<vb::CostSegment> segs;
    for (int t = 0; t < T; ++t) {
      // Two convex pieces per QH, as in the recourse problem.
      const double a = vb.p_max_mw[t] * frac(rng), base = price(rng);
      segs.push_back({t, a, base});
      segs.push_back({t, vb.p_max_mw[t] - a, base + 5.0 * frac(rng)});
    }
    const auto c = vb::min_cost_charging(vb, segs);
    ASSERT_TRUE(vb::is_feasible_trajectory(vb, c, 1e-9).feasible);
    EXPECT_NEAR(oracle::segment_cost(c, segs), oracle::lp_min_cost(vb, segs), 1e-7) << "trial " << trial;
  }
}

TEST(VirtualBattery, SinglePriceChargingPrefersCheapHours) {
  const auto vb = vb::build_envelopes({{0, 4, 2.75, 11.0}}, 4);  // one QH worth of energy
  const std::vector<double> price = {50.0, 10.0, 10.0, 30.0};
  const auto c = vb::min_cost_charging(vb, price);
  EXPECT_NEAR(c[1], 0.011, 1e-12);  // ties go to the earlier QH
  EXPECT_NEAR(c[0] + c[2] + c[3], 0.0, 1e-12);
}

TEST(VirtualBattery, CsvRoundTripIsExact) {
  std::mt19937_64 rng(5);
  const auto vb = vb::build_envelopes(random_fleet(rng), 96);
  const auto path = std::filesystem::temp_directory_path() / "mfrr_test_envelopes.csv";
  csv::write_file(path, vb::to_csv(vb));
  const auto back = vb::read_csv(path);
  EXPECT_EQ(back.e_min_mwh, vb.e_min_mwh);
  EXPECT_EQ(back.e_max_mwh, vb.e_max_mwh);
  EXPECT_EQ(back.p_max_mw, vb.p_max_mw);
  std::filesystem::remove(path);
}
