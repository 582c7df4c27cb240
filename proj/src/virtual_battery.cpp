#include "mfrr/virtual_battery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mfrr/common.hpp"
#include "mfrr/csv.hpp"

namespace mfrr::vb {

VirtualBattery build_envelopes(const std::vector<fleet::EvSession>& sessions, int horizon_qh) {
  if (horizon_qh < 1) throw InputError("envelopes: horizon must be >= 1 QH");
  const auto report = fleet::validate_sessions(sessions, horizon_qh);
  if (!report.ok())
    throw InputError("envelopes: " + std::to_string(report.total()) +
                     " session invariant violation(s)");

  const int T = horizon_qh;
  VirtualBattery vb;
  vb.horizon_qh = T;
  std::vector<double> early(T, 0.0), late(T, 0.0);  // per-QH energy, MWh
  vb.p_max_mw.assign(T, 0.0);

  for (const auto& s : sessions) {
    const double e = s.energy_kwh / 1000.0;
    const double step = s.power_kw / 1000.0 * kQhHours;
    double left = e;
    for (int t = s.arrival_qh; t < s.departure_qh && left > 0.0; ++t) {
      const double d = std::min(step, left);
      early[t] += d;
      left -= d;
    }
    left = e;
    for (int t = s.departure_qh - 1; t >= s.arrival_qh && left > 0.0; --t) {
      const double d = std::min(step, left);
      late[t] += d;
      left -= d;
    }
    for (int t = s.arrival_qh; t < s.departure_qh; ++t) vb.p_max_mw[t] += s.power_kw / 1000.0;
  }

  vb.e_max_mwh.assign(T + 1, 0.0);
  vb.e_min_mwh.assign(T + 1, 0.0);
  for (int t = 0; t < T; ++t) {
    vb.e_max_mwh[t + 1] = vb.e_max_mwh[t] + early[t];
    vb.e_min_mwh[t + 1] = vb.e_min_mwh[t] + late[t];
  }
  // Both sums carry the same total up to rounding order; pin the end point.
  double total = 0.0;
  for (const auto& s : sessions) total += s.energy_kwh / 1000.0;
  vb.e_max_mwh[T] = total;
  vb.e_min_mwh[T] = total;
  for (int t = 0; t <= T; ++t) {
    vb.e_max_mwh[t] = std::min(vb.e_max_mwh[t], total);
    vb.e_min_mwh[t] = std::min(vb.e_min_mwh[t], vb.e_max_mwh[t]);
  }
  return vb;
}

std::optional<std::string> check_invariants(const VirtualBattery& vb, double tol) {
  const int T = vb.horizon_qh;
  if (static_cast<int>(vb.e_min_mwh.size()) != T + 1 ||
      static_cast<int>(vb.e_max_mwh.size()) != T + 1 || static_cast<int>(vb.p_max_mw.size()) != T)
    return "envelope lengths do not match the horizon";
  if (std::abs(vb.e_min_mwh[0]) > tol || std::abs(vb.e_max_mwh[0]) > tol)
    return "envelopes do not start at zero";
  for (int t = 0; t < T; ++t) {
    if (vb.p_max_mw[t] < -tol) return "negative power cap at qh " + std::to_string(t);
    const double dmax = vb.e_max_mwh[t + 1] - vb.e_max_mwh[t];
    const double dmin = vb.e_min_mwh[t + 1] - vb.e_min_mwh[t];
    if (dmax < -tol) return "e_max decreases at qh " + std::to_string(t);
    if (dmin < -tol) return "e_min decreases at qh " + std::to_string(t);
    const double cap = vb.p_max_mw[t] * kQhHours + tol;
    if (dmax > cap) return "e_max increment exceeds power cap at qh " + std::to_string(t);
    if (dmin > cap) return "e_min increment exceeds power cap at qh " + std::to_string(t);
  }
  for (int t = 0; t <= T; ++t)
    if (vb.e_min_mwh[t] > vb.e_max_mwh[t] + tol)
      return "e_min exceeds e_max at boundary " + std::to_string(t);
  if (std::abs(vb.e_min_mwh[T] - vb.e_max_mwh[T]) > tol) return "envelopes disagree at horizon end";
  return std::nullopt;
}

TrajectoryCheck is_feasible_trajectory(const VirtualBattery& vb, std::span<const double> charging_mw,
                                       double tol_mwh) {
  if (static_cast<int>(charging_mw.size()) != vb.horizon_qh)
    throw InputError("trajectory length " + std::to_string(charging_mw.size()) +
                     " does not match horizon " + std::to_string(vb.horizon_qh));
  const double tol_mw = tol_mwh / kQhHours;
  double cum = 0.0;
  for (int t = 0; t < vb.horizon_qh; ++t) {
    const double c = charging_mw[t];
    if (c < -tol_mw) return {false, t, "negative charging"};
    if (c > vb.p_max_mw[t] + tol_mw) return {false, t, "charging above power cap"};
    cum += kQhHours * c;
    if (cum < vb.e_min_mwh[t + 1] - tol_mwh) return {false, t, "energy below e_min"};
    if (cum > vb.e_max_mwh[t + 1] + tol_mwh) return {false, t, "energy above e_max"};
  }
  return {};
}

void require_feasible(const VirtualBattery& vb) {
  double lo = 0.0, hi = 0.0;
  for (int t = 0; t < vb.horizon_qh; ++t) {
    hi += kQhHours * std::max(0.0, vb.p_max_mw[t]);
    lo = std::max(lo, vb.e_min_mwh[t + 1]);
    hi = std::min(hi, vb.e_max_mwh[t + 1]);
    if (lo > hi + 1e-9)
      throw InfeasibleError("envelopes infeasible: e_min cannot be reached by qh " +
                                std::to_string(t),
                            t);
  }
  if (hi < vb.total_energy_mwh() - 1e-9)
    throw InfeasibleError("envelopes infeasible: energy need unreachable", vb.horizon_qh - 1);
}

std::vector<double> earliest_start_profile(const VirtualBattery& vb) {
  std::vector<double> p(vb.horizon_qh);
  for (int t = 0; t < vb.horizon_qh; ++t)
    p[t] = (vb.e_max_mwh[t + 1] - vb.e_max_mwh[t]) / kQhHours;
  return p;
}

std::vector<double> latest_start_profile(const VirtualBattery& vb) {
  std::vector<double> p(vb.horizon_qh);
  for (int t = 0; t < vb.horizon_qh; ++t)
    p[t] = (vb.e_min_mwh[t + 1] - vb.e_min_mwh[t]) / kQhHours;
  return p;
}

std::vector<double> min_cost_charging(const VirtualBattery& vb,
                                      std::span<const CostSegment> segments) {
  const int T = vb.horizon_qh;
  const double E = vb.total_energy_mwh();
  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (segments[a].cost_per_mwh != segments[b].cost_per_mwh)
      return segments[a].cost_per_mwh < segments[b].cost_per_mwh;
    return segments[a].qh < segments[b].qh;
  });

  std::vector<double> fixed(T, 0.0);  // assigned charging, MW
  std::vector<double> free(T, 0.0);   // capacity of unassigned segments, MW
  for (const auto& s : segments) {
    if (s.qh < 0 || s.qh >= T) throw InputError("cost segment outside horizon");
    free[s.qh] += std::max(0.0, s.cap_mw);
  }
  auto free_cap = [&](int t) { return std::min(free[t], std::max(0.0, vb.p_max_mw[t] - fixed[t])); };

  std::vector<double> fwd_lo(T + 1), fwd_hi(T + 1), bwd_lo(T + 1), bwd_hi(T + 1);
  auto forward = [&] {
    fwd_lo[0] = fwd_hi[0] = 0.0;
    for (int t = 0; t < T; ++t) {
      fwd_lo[t + 1] = std::max(fwd_lo[t] + kQhHours * fixed[t], vb.e_min_mwh[t + 1]);
      fwd_hi[t + 1] = std::min(fwd_hi[t] + kQhHours * (fixed[t] + free_cap(t)), vb.e_max_mwh[t + 1]);
      if (fwd_lo[t + 1] > fwd_hi[t + 1] + 1e-9)
        throw InfeasibleError("no envelope-feasible charging exists (binding qh " +
                                  std::to_string(t) + ")",
                              t);
    }
    if (fwd_lo[T] > E + 1e-9 || fwd_hi[T] < E - 1e-9)
      throw InfeasibleError("fleet energy need cannot be met within the envelopes", T - 1);
  };
  auto backward = [&] {
    bwd_lo[T] = bwd_hi[T] = E;
    for (int t = T - 1; t >= 0; --t) {
      bwd_lo[t] = std::max(bwd_lo[t + 1] - kQhHours * (fixed[t] + free_cap(t)), vb.e_min_mwh[t]);
      bwd_hi[t] = std::min(bwd_hi[t + 1] - kQhHours * fixed[t], vb.e_max_mwh[t]);
    }
  };

  forward();
  for (std::size_t idx : order) {
    const auto& seg = segments[idx];
    const int q = seg.qh;
    const double cap = std::max(0.0, seg.cap_mw);
    free[q] -= cap;
    backward();
    // Largest y with fwd_lo[q] + 0.25 * (fixed + y) <= bwd_hi[q + 1].
    double y = (bwd_hi[q + 1] - fwd_lo[q]) / kQhHours - fixed[q];
    y = std::clamp(y, 0.0, std::min(cap, std::max(0.0, vb.p_max_mw[q] - fixed[q])));
    fixed[q] += y;
    forward();
  }
  return fixed;
}

std::vector<double> min_cost_charging(const VirtualBattery& vb, std::span<const double> price_per_mwh) {
  if (static_cast<int>(price_per_mwh.size()) != vb.horizon_qh)
    throw InputError("price series length does not match horizon");
  std::vector<CostSegment> segs;
  segs.reserve(price_per_mwh.size());
  for (int t = 0; t < vb.horizon_qh; ++t) segs.push_back({t, vb.p_max_mw[t], price_per_mwh[t]});
  return min_cost_charging(vb, segs);
}

std::string to_csv(const VirtualBattery& vb) {
  std::ostringstream os;
  os << "qh_index,e_min_mwh,e_max_mwh,p_max_mw\n";
  for (int t = 0; t <= vb.horizon_qh; ++t) {
    os << t << ',' << csv::format(vb.e_min_mwh[t]) << ',' << csv::format(vb.e_max_mwh[t]) << ',';
    if (t < vb.horizon_qh) os << csv::format(vb.p_max_mw[t]);
    os << '\n';
  }
  return os.str();
}

VirtualBattery read_csv(const std::filesystem::path& path) {
  const auto tab = csv::read(path);
  const auto ci = tab.column("qh_index"), cmin = tab.column("e_min_mwh"),
             cmax = tab.column("e_max_mwh"), cp = tab.column("p_max_mw");
  const std::string ctx = path.string();
  if (tab.rows.size() < 2) throw InputError(ctx + ": envelope file needs at least two rows");
  VirtualBattery vb;
  vb.horizon_qh = static_cast<int>(tab.rows.size()) - 1;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const auto& row = tab.rows[r];
    if (csv::to_int(row[ci], ctx) != static_cast<long long>(r))
      throw InputError(ctx + ": qh_index must run 0..T in order");
    vb.e_min_mwh.push_back(csv::to_double(row[cmin], ctx));
    vb.e_max_mwh.push_back(csv::to_double(row[cmax], ctx));
    if (static_cast<int>(r) < vb.horizon_qh) vb.p_max_mw.push_back(csv::to_double(row[cp], ctx));
  }
  return vb;
}

}  // namespace mfrr::vb
