#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfrr/fleet.hpp"

namespace mfrr::vb {

/// Aggregate flexibility of a fleet. Energy envelopes are cumulative values at
/// QH boundaries (index t is the energy delivered before QH t starts), so they
/// have horizon_qh + 1 entries; the power cap has one entry per QH.
struct VirtualBattery {
  int horizon_qh = 0;
  std::vector<double> e_min_mwh;  // latest-start bound
  std::vector<double> e_max_mwh;  // earliest-start bound
  std::vector<double> p_max_mw;   // plugged-in charger capacity

  double total_energy_mwh() const { return e_min_mwh.empty() ? 0.0 : e_min_mwh.back(); }
};

/// Builds the envelopes. Throws InputError if any session violates the
/// session invariants for this horizon.
VirtualBattery build_envelopes(const std::vector<fleet::EvSession>& sessions, int horizon_qh);

/// Names the first violated VirtualBattery invariant, or nullopt.
std::optional<std::string> check_invariants(const VirtualBattery& vb, double tol = 1e-9);

struct TrajectoryCheck {
  bool feasible = true;
  int first_violation_qh = -1;
  std::string reason;
};

/// Checks a per-QH charging series (MW) against the power cap and the energy
/// band, with `tol_mwh` slack on energies (and tol_mwh / 0.25 h on power).
TrajectoryCheck is_feasible_trajectory(const VirtualBattery& vb, std::span<const double> charging_mw,
                                       double tol_mwh = 1e-6);

/// Throws InfeasibleError naming the binding QH when no trajectory can stay
/// inside the envelopes (possible for user-supplied envelopes).
void require_feasible(const VirtualBattery& vb);

/// Increments of e_min / e_max, i.e. the latest- and earliest-start
/// trajectories, in MW.
std::vector<double> latest_start_profile(const VirtualBattery& vb);
std::vector<double> earliest_start_profile(const VirtualBattery& vb);

/// A block of charging capacity at one QH with a linear cost (per MWh).
struct CostSegment {
  int qh = 0;
  double cap_mw = 0.0;
  double cost_per_mwh = 0.0;
};

/// Minimum-cost envelope-feasible charging for separable costs given as
/// segments; per-QH convex costs are expressed as segments with increasing
/// cost. Segments are filled greedily in cost order (ties to the earlier QH,
/// then the earlier segment), each as far as feasibility allows. The
/// envelope constraints form a cross-free family, so this is exact.
/// Capacity not covered by any segment is unusable. Throws InfeasibleError
/// if the segments cannot meet the envelopes.
std::vector<double> min_cost_charging(const VirtualBattery& vb, std::span<const CostSegment> segments);

/// Convenience for a single linear price per QH over the full power cap.
std::vector<double> min_cost_charging(const VirtualBattery& vb, std::span<const double> price_per_mwh);

std::string to_csv(const VirtualBattery& vb);
VirtualBattery read_csv(const std::filesystem::path& path);

}  // namespace mfrr::vb
