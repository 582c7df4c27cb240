#include "mfrr/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mfrr/common.hpp"
#include "mfrr/csv.hpp"

namespace mfrr::fleet {
namespace {

constexpr int kMaxRedraws = 100;

double draw_normal(std::mt19937_64& rng, double mean, double sd) {
  if (sd == 0.0) return mean;
  return std::normal_distribution<double>(mean, sd)(rng);
}

double draw_lognormal(std::mt19937_64& rng, double mu, double sigma) {
  if (sigma == 0.0) return std::exp(mu);
  return std::lognormal_distribution<double>(mu, sigma)(rng);
}

double max_deliverable_kwh(const EvSession& s) {
  return s.power_kw * kQhHours * (s.departure_qh - s.arrival_qh);
}

}  // namespace

int hours_to_qh(double hours, double start_h) {
  return static_cast<int>(std::round((hours - start_h) / kQhHours));
}

void validate_spec(const FleetSpec& spec) {
  if (spec.n_vehicles < 1) throw InputError("fleet: n_vehicles must be >= 1");
  if (!(spec.power_kw > 0.0)) throw InputError("fleet: power_kw must be > 0");
  if (spec.horizon_qh < 1) throw InputError("fleet: horizon_qh must be >= 1");
  if (spec.energy_lognormal_sigma < 0.0 || spec.arrival_sd_h < 0.0 || spec.departure_sd_h < 0.0)
    throw InputError("fleet: standard deviations must be >= 0");
  for (double v : {spec.energy_lognormal_mu, spec.energy_lognormal_sigma, spec.arrival_mean_h,
                   spec.arrival_sd_h, spec.departure_mean_h, spec.departure_sd_h,
                   spec.horizon_start_h})
    if (!std::isfinite(v)) throw InputError("fleet: non-finite parameter");

  const double horizon_h = spec.horizon_qh * kQhHours;
  const double arr = spec.arrival_mean_h - spec.horizon_start_h;
  const double dep = spec.departure_mean_h + 24.0 - spec.horizon_start_h;
  if (arr < 0.0 || arr >= horizon_h)
    throw InputError("fleet: arrival mean lies outside the horizon");
  if (dep <= arr || dep > horizon_h)
    throw InputError("fleet: departure mean (next day) lies outside the horizon");
}

std::vector<EvSession> sample_fleet(const FleetSpec& spec) {
  validate_spec(spec);
  const int T = spec.horizon_qh;
  std::mt19937_64 rng(substream_seed(spec.rng_seed, 0));

  auto draw = [&] {
    EvSession s;
    const double arr_h = draw_normal(rng, spec.arrival_mean_h, spec.arrival_sd_h);
    const double dep_h = draw_normal(rng, spec.departure_mean_h, spec.departure_sd_h) + 24.0;
    s.energy_kwh = draw_lognormal(rng, spec.energy_lognormal_mu, spec.energy_lognormal_sigma);
    s.power_kw = spec.power_kw;
    s.arrival_qh = std::clamp(hours_to_qh(arr_h, spec.horizon_start_h), 0, T);
    s.departure_qh = std::clamp(hours_to_qh(dep_h, spec.horizon_start_h), 0, T);
    return s;
  };

  std::vector<EvSession> out;
  out.reserve(static_cast<std::size_t>(spec.n_vehicles));
  for (int v = 0; v < spec.n_vehicles; ++v) {
    EvSession s = draw();
    for (int attempt = 1; attempt < kMaxRedraws; ++attempt) {
      if (s.departure_qh > s.arrival_qh && s.energy_kwh > 0.0 &&
          s.energy_kwh <= max_deliverable_kwh(s))
        break;
      s = draw();
    }
    if (s.departure_qh <= s.arrival_qh) {
      s.arrival_qh = std::min(s.arrival_qh, T - 1);
      s.departure_qh = s.arrival_qh + 1;
    }
    s.energy_kwh = std::min(s.energy_kwh, max_deliverable_kwh(s));
    out.push_back(s);
  }
  return out;
}

ValidationReport validate_sessions(const std::vector<EvSession>& sessions, int horizon_qh) {
  ValidationReport r;
  r.checked = sessions.size();
  for (const auto& s : sessions) {
    if (s.arrival_qh < 0 || s.arrival_qh >= horizon_qh) ++r.arrival_out_of_range;
    if (s.departure_qh > horizon_qh) ++r.departure_out_of_range;
    if (s.departure_qh <= s.arrival_qh) ++r.empty_window;
    if (!(s.energy_kwh > 0.0)) ++r.nonpositive_energy;
    if (!(s.power_kw > 0.0)) ++r.nonpositive_power;
    // Small relative slack: energies clipped to the window are exact products.
    const double cap = s.power_kw * kQhHours * std::max(0, s.departure_qh - s.arrival_qh);
    if (s.energy_kwh > cap * (1.0 + 1e-12)) ++r.not_completable;
  }
  return r;
}

std::string sessions_to_csv(const std::vector<EvSession>& sessions) {
  std::ostringstream os;
  os << "vehicle_id,arrival_qh,departure_qh,energy_kwh,power_kw\n";
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    os << i << ',' << s.arrival_qh << ',' << s.departure_qh << ',' << csv::format(s.energy_kwh)
       << ',' << csv::format(s.power_kw) << '\n';
  }
  return os.str();
}

std::vector<EvSession> read_sessions_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto ca = t.column("arrival_qh"), cd = t.column("departure_qh"),
             ce = t.column("energy_kwh"), cp = t.column("power_kw");
  std::vector<EvSession> out;
  out.reserve(t.rows.size());
  const std::string ctx = path.string();
  for (const auto& row : t.rows) {
    EvSession s;
    s.arrival_qh = static_cast<int>(csv::to_int(row[ca], ctx));
    s.departure_qh = static_cast<int>(csv::to_int(row[cd], ctx));
    s.energy_kwh = csv::to_double(row[ce], ctx);
    s.power_kw = csv::to_double(row[cp], ctx);
    out.push_back(s);
  }
  return out;
}

}  // namespace mfrr::fleet
