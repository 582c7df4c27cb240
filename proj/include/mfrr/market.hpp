#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfrr::market {

enum class RegulationState : std::uint8_t { None = 0, Up = 1, Down = 2 };

inline constexpr int kStates = 3;
/// Sojourn-length bins: 1, 2, 3 and >= 4 quarter-hours in the current state.
inline constexpr int kDurationBins = 4;

std::string_view to_string(RegulationState s);
RegulationState parse_state(std::string_view s);

/// Bin index for a sojourn of `qhs` quarter-hours (qhs >= 1).
inline int duration_bin(int qhs) { return (qhs >= kDurationBins ? kDurationBins : qhs) - 1; }

/// Semi-Markov regulation-state chain. The transition row used when leaving
/// quarter-hour-of-day q, in state s, after a sojourn in bin b, is
/// row(q, s, b); `initial` is the state distribution at the horizon start.
struct StateChainParams {
  std::vector<double> transition;  // [kQhPerDay][kStates][kDurationBins][kStates]
  std::array<double, kStates> initial{1.0, 0.0, 0.0};

  StateChainParams();

  std::span<double, kStates> row(int qh_of_day, RegulationState from, int bin);
  std::span<const double, kStates> row(int qh_of_day, RegulationState from, int bin) const;

  /// Chain that starts in `s` and never leaves it.
  static StateChainParams absorbing(RegulationState s);
};

/// Throws InputError unless every row and the initial distribution are
/// probability vectors (sum 1 within 1e-9).
void validate(const StateChainParams& chain);

/// Log-premium AR(1): y' = mu + phi (y - mu) + eps, eps drawn from the pool.
struct PremiumProcess {
  double mu_log = 0.0;
  double phi = 0.5;
  std::vector<double> residual_pool{0.0};
  double init_log = 0.0;
};

struct PremiumModelParams {
  PremiumProcess up;  // lambda_up - lambda_da
  PremiumProcess dn;  // lambda_da - lambda_dn
};

void validate(const PremiumModelParams& prem);

struct DayAheadPrices {
  std::vector<double> eur_mwh;  // one value per QH
  std::string source;
};

/// One joint path of regulation states and activation prices. Prices are
/// NaN where the state does not activate that direction.
struct MarketScenario {
  std::vector<RegulationState> states;
  std::vector<double> price_up_eur_mwh;
  std::vector<double> price_dn_eur_mwh;
  double weight = 1.0;

  int horizon_qh() const { return static_cast<int>(states.size()); }
};

// ---- history and calibration ----

struct HistoryRecord {
  std::int64_t minute = 0;  // minutes since 1970-01-01 in the timestamps' own clock
  int qh_of_day = 0;
  double lambda_da = 0.0;
  std::optional<double> lambda_up;
  std::optional<double> lambda_dn;
};

/// Parses "YYYY-MM-DDTHH:MM[:SS]" (anything after the minutes is ignored).
std::int64_t parse_timestamp_minutes(std::string_view ts);

std::vector<HistoryRecord> read_history_csv(const std::filesystem::path& path);

struct CalibrationOptions {
  double trim_quantile = 0.01;
  /// Transition rows are pooled over this many equal time-of-day blocks;
  /// 96 estimates one row set per quarter-hour of day.
  int tod_blocks = 96;
  double horizon_start_h = 13.0;
  /// Used when the AR fit is degenerate.
  double default_phi = 0.5;
};

struct CalibrationReport {
  std::size_t records = 0;
  std::size_t transitions = 0;
  std::size_t both_directions = 0;     // QHs with up and down prices; larger premium wins
  std::size_t nonpositive_premia = 0;  // dropped before taking logs
  std::size_t trimmed_up = 0, trimmed_dn = 0;
  std::size_t empty_cells = 0;  // rows filled from the pooled time-of-day row
  bool phi_up_degenerate = false, phi_dn_degenerate = false;
};

struct Calibration {
  StateChainParams chain;
  PremiumModelParams premia;
  CalibrationReport report;
};

/// Regulation state implied by a record; when both directions carry a
/// price, the one with the larger absolute premium wins.
RegulationState infer_state(const HistoryRecord& r, bool* both = nullptr);

Calibration calibrate(std::span<const HistoryRecord> history, const CalibrationOptions& opt = {});

/// Removes the floor(q * n) largest values; returns the survivors in their
/// original order.
std::vector<double> trim_upper(std::span<const double> values, double q);

/// Synthetic parameters used when no history is supplied: down regulation is
/// more frequent than up, up premia are larger.
Calibration bundled_defaults();

// ---- sampling ----

/// `start_qh_of_day` is the quarter-hour-of-day of horizon index 0.
std::vector<MarketScenario> sample_scenarios(const StateChainParams& chain, const PremiumModelParams& prem,
                                             const DayAheadPrices& da, int n, std::uint64_t seed,
                                             int start_qh_of_day = 52);

/// Greedy most probable state per QH (ties: None, then Down, then Up) with
/// premia on the noise-free mean path.
MarketScenario most_likely_path(const StateChainParams& chain, const PremiumModelParams& prem,
                                const DayAheadPrices& da, int start_qh_of_day = 52);

/// Throws InputError naming the first broken scenario invariant.
void validate_scenarios(std::span<const MarketScenario> scenarios, const DayAheadPrices& da);

// ---- day-ahead prices ----

/// Reads a `timestamp,lambda_da` CSV with either one row per QH or one row
/// per hour (replicated to four QHs).
DayAheadPrices read_day_ahead_csv(const std::filesystem::path& path, int horizon_qh);
std::string day_ahead_to_csv(const DayAheadPrices& da);

/// Synthetic 13:00-13:00 price days: "duck_curve" (near-zero early
/// afternoon, evening high) and "double_peak" (evening and morning peaks).
DayAheadPrices synthetic_day_ahead(std::string_view shape, int horizon_qh = 96);

// ---- serialization ----

/// Columns scenario_id, qh, state, price_up, price_dn; undefined prices are
/// empty fields. Weights are equal and not stored.
std::string scenarios_to_csv(std::span<const MarketScenario> scenarios);
std::vector<MarketScenario> read_scenarios_csv(const std::filesystem::path& path);

/// Stable content hash of a scenario set.
std::string scenario_set_hash(std::span<const MarketScenario> scenarios);

std::string calibration_to_json(const Calibration& cal);
Calibration calibration_from_json(std::string_view text);

}  // namespace mfrr::market
