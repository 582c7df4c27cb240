#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfrr/bidding.hpp"
#include "mfrr/config.hpp"
#include "mfrr/fleet.hpp"
#include "mfrr/kpi.hpp"
#include "mfrr/market.hpp"
#include "mfrr/virtual_battery.hpp"

namespace mfrr::pipeline {

/// Name of the environment variable that overrides the output directory.
inline constexpr const char* kOutputDirEnv = "MFRR_OUTPUT_DIR";

/// Replaces cfg.output_dir with $MFRR_OUTPUT_DIR when that is set and
/// non-empty.
void apply_environment(config::RunConfig& cfg);

// Stage building blocks shared by run_pipeline and the CLI subcommands.

std::vector<fleet::EvSession> make_sessions(const config::RunConfig& cfg);
market::Calibration make_calibration(const config::RunConfig& cfg);
/// The chain used for sampling: the calibrated one unless overridden.
market::StateChainParams sampling_chain(const config::RunConfig& cfg, const market::Calibration& cal);
market::DayAheadPrices make_day_ahead(const config::RunConfig& cfg);
std::vector<market::MarketScenario> make_scenarios(const config::RunConfig& cfg, const market::Calibration& cal,
                                                   const market::DayAheadPrices& da);
/// `start` seeds the co-optimised search (ignored for the independent mode).
bidding::BidSolution solve(const config::RunConfig& cfg, bidding::Mode mode, const vb::VirtualBattery& vb,
                           std::span<const market::MarketScenario> scenarios, const market::DayAheadPrices& da,
                           const bidding::BidSolution* start = nullptr);

struct Result {
  bool ok = true;
  std::string failed_stage;
  std::string error;
  std::vector<std::string> artifacts;  // file names relative to the output directory
};

/// fleet, envelopes, scenarios, solve, evaluate, compare. Every artifact is
/// written as soon as its stage finishes; MANIFEST is written last, also on
/// failure, and names the failing stage.
Result run_pipeline(const config::RunConfig& cfg);

/// MANIFEST content: status, failing stage, config hash and the artifacts
/// with their content hashes.
std::string manifest_json(const config::RunConfig& cfg, const Result& r);

}  // namespace mfrr::pipeline
