#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mfrr::fleet {

/// One charging session. Times are quarter-hour indices relative to the
/// horizon start; a vehicle is plugged in for QHs [arrival_qh, departure_qh).
struct EvSession {
  int arrival_qh = 0;
  int departure_qh = 0;
  double energy_kwh = 0.0;
  double power_kw = 0.0;

  friend bool operator==(const EvSession&, const EvSession&) = default;
};

/// Sampling distributions for a synthetic residential cohort. Defaults
/// reproduce the long-duration residential profile: lognormal energy, normal
/// evening arrivals and next-morning departures, 11 kW chargers.
struct FleetSpec {
  int n_vehicles = 1000;
  double energy_lognormal_mu = 2.6;
  double energy_lognormal_sigma = 0.6;
  double arrival_mean_h = 17.1;
  double arrival_sd_h = 1.3;
  double departure_mean_h = 8.9;  // clock time on the following day
  double departure_sd_h = 1.3;
  double power_kw = 11.0;
  double horizon_start_h = 13.0;
  int horizon_qh = 96;
  std::uint64_t rng_seed = 1;
};

/// Throws InputError if `spec` is unusable. Standard deviations may be zero
/// (degenerate draws) but not negative.
void validate_spec(const FleetSpec& spec);

/// Samples `spec.n_vehicles` sessions. Draws whose plug window is empty or
/// too short for the energy need are redrawn (up to 100 times per vehicle);
/// after that the energy is clipped to what the window can deliver.
/// Deterministic for a fixed seed.
std::vector<EvSession> sample_fleet(const FleetSpec& spec);

/// Rounds a clock time (hours) to the nearest quarter-hour index relative to
/// `start_h`, halves away from zero.
int hours_to_qh(double hours, double start_h);

struct ValidationReport {
  std::size_t checked = 0;
  std::size_t arrival_out_of_range = 0;    // arrival < 0 or arrival >= T
  std::size_t departure_out_of_range = 0;  // departure > T
  std::size_t empty_window = 0;            // departure <= arrival
  std::size_t nonpositive_energy = 0;
  std::size_t nonpositive_power = 0;
  std::size_t not_completable = 0;  // energy > power * 0.25 h * window

  std::size_t total() const {
    return arrival_out_of_range + departure_out_of_range + empty_window +
           nonpositive_energy + nonpositive_power + not_completable;
  }
  bool ok() const { return total() == 0; }
};

ValidationReport validate_sessions(const std::vector<EvSession>& sessions, int horizon_qh);

/// CSV with columns vehicle_id, arrival_qh, departure_qh, energy_kwh, power_kw.
std::string sessions_to_csv(const std::vector<EvSession>& sessions);
std::vector<EvSession> read_sessions_csv(const std::filesystem::path& path);

}  // namespace mfrr::fleet
