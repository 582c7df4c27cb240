#pragma once

// Reference computations for tests, written without reusing the library's
// algorithms: closed-form per-vehicle envelopes, LP formulations solved by the
// dense simplex, brute-force enumeration of integer bids.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mfrr/bidding.hpp"
#include "mfrr/fleet.hpp"
#include "mfrr/market.hpp"
#include "mfrr/virtual_battery.hpp"

namespace oracle {

/// Earliest- and latest-start energy (MWh) delivered before boundary t,
/// summed vehicle by vehicle from the closed forms.
double e_max_at(const std::vector<mfrr::fleet::EvSession>& sessions, int t);
double e_min_at(const std::vector<mfrr::fleet::EvSession>& sessions, int t);
double p_max_at(const std::vector<mfrr::fleet::EvSession>& sessions, int t);

/// Minimum cost of meeting the envelopes with the given segments, by LP.
double lp_min_cost(const mfrr::vb::VirtualBattery& vb, std::span<const mfrr::vb::CostSegment> segments);

/// Cost of a charging series under the segments (cheapest segments first
/// within each QH).
double segment_cost(std::span<const double> charging_mw, std::span<const mfrr::vb::CostSegment> segments);

/// Small random battery with envelopes built directly, not from sessions.
mfrr::vb::VirtualBattery random_battery(std::mt19937_64& rng, int T, double p_lo, double p_hi);

std::vector<mfrr::market::MarketScenario> random_scenarios(std::mt19937_64& rng, int n,
                                                          const mfrr::market::DayAheadPrices& da);

mfrr::market::DayAheadPrices random_prices(std::mt19937_64& rng, int T);

/// Best risk-weighted objective for fixed integer bids: LP over p_da (or
/// the given fixed p_da), per-scenario charging and imbalance, zeta, eta.
double fixed_bid_value(const mfrr::vb::VirtualBattery& vb, std::span<const mfrr::market::MarketScenario> scenarios,
                       const mfrr::market::DayAheadPrices& da, const mfrr::bidding::RiskParams& risk, double fee,
                       std::span<const int> up, std::span<const int> dn, std::span<const double> p_da_fixed = {});

/// Exhaustive search over all integer bid pairs satisfying the buffer rule.
double enumerate_optimum(const mfrr::vb::VirtualBattery& vb, std::span<const mfrr::market::MarketScenario> scenarios,
                         const mfrr::market::DayAheadPrices& da, const mfrr::bidding::RiskParams& risk, double fee,
                         std::span<const double> p_da_fixed = {});

/// Semi-Markov chain whose rows are constant over `blocks` equal
/// time-of-day blocks and differ between blocks and sojourn bins.
mfrr::market::StateChainParams block_chain(int blocks);

struct SimulatedHistory {
  std::vector<mfrr::market::HistoryRecord> records;
  /// Observed departures per [qh_of_day][state][bin] cell, counted while
  /// simulating.
  std::vector<double> visits;
};

/// Continuous path of `n_qh` quarter-hours from 2020-01-01T00:00 with a
/// flat 50 EUR/MWh day-ahead price and positive premia on activated QHs.
SimulatedHistory simulate_history(const mfrr::market::StateChainParams& chain, int n_qh, std::uint64_t seed);

/// Lower-tail mean by direct definition: sort, take mass 1 - alpha from the
/// bottom.
double tail_mean(std::vector<double> profits, double alpha);

}  // namespace oracle
