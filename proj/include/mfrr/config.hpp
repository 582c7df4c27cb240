#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mfrr/bidding.hpp"
#include "mfrr/fleet.hpp"
#include "mfrr/market.hpp"

namespace mfrr::config {

/// Everything one pipeline run needs. Empty paths select the built-in
/// alternative: sampled sessions, bundled market parameters, synthetic
/// prices of shape `price_day`.
struct RunConfig {
  fleet::FleetSpec fleet;
  std::filesystem::path sessions_path;
  std::filesystem::path history_path;
  std::filesystem::path day_ahead_path;
  std::string price_day = "duck_curve";

  market::CalibrationOptions calibration;
  /// "none" keeps the calibrated chain; "all_none", "all_up" and "all_down"
  /// replace it with one that stays in that state.
  std::string chain_override = "none";

  int n_scenarios = 200;
  std::uint64_t seed = 1;
  bidding::RiskParams risk;
  double fee_eur_mwh = 1.0;
  std::vector<bidding::Mode> modes{bidding::Mode::Independent, bidding::Mode::Cooptimized};
  bidding::SolveOptions solver;

  std::filesystem::path output_dir = "out";
};

/// Throws InputError naming the offending key.
void validate(const RunConfig& cfg);

/// Applies one `key = value` setting. Relative paths are resolved against
/// `base_dir`.
void set(RunConfig& cfg, std::string_view key, std::string_view value, const std::filesystem::path& base_dir = {});

/// Parses a flat key = value file; '#' starts a comment. Unknown keys are
/// errors.
RunConfig parse(std::string_view text, const std::filesystem::path& base_dir = {}, const std::string& source = "");
RunConfig load(const std::filesystem::path& path);

/// Canonical key = value listing of every setting except output_dir.
std::string to_text(const RunConfig& cfg);
std::string hash(const RunConfig& cfg);

/// Keys accepted by set(), in to_text() order, with output_dir last.
std::vector<std::string> keys();

std::uint64_t fleet_seed(const RunConfig& cfg);
std::uint64_t scenario_seed(const RunConfig& cfg);

}  // namespace mfrr::config
