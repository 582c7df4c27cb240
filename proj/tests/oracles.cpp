#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "mfrr/common.hpp"
#include "mfrr/lp/simplex.hpp"

namespace oracle {

using mfrr::kQhHours;
using mfrr::lp::kInf;
using mfrr::lp::Model;
using mfrr::market::RegulationState;

namespace {

double kw_to_mwh_per_qh(double kw) { return kw / 1000.0 * kQhHours; }

}  // namespace

double e_max_at(const std::vector<mfrr::fleet::EvSession>& sessions, int t) {
  double sum = 0.0;
  for (const auto& s : sessions) {
    const int plugged = std::clamp(t, s.arrival_qh, s.departure_qh) - s.arrival_qh;
    sum += std::min(s.energy_kwh / 1000.0, plugged * kw_to_mwh_per_qh(s.power_kw));
  }
  return sum;
}

double e_min_at(const std::vector<mfrr::fleet::EvSession>& sessions, int t) {
  double sum = 0.0;
  for (const auto& s : sessions) {
    const int remaining = s.departure_qh - std::clamp(t, s.arrival_qh, s.departure_qh);
    sum += std::max(0.0, s.energy_kwh / 1000.0 - remaining * kw_to_mwh_per_qh(s.power_kw));
  }
  return sum;
}

double p_max_at(const std::vector<mfrr::fleet::EvSession>& sessions, int t) {
  double sum = 0.0;
  for (const auto& s : sessions)
    if (s.arrival_qh <= t && t < s.departure_qh) sum += s.power_kw / 1000.0;
  return sum;
}

double lp_min_cost(const mfrr::vb::VirtualBattery& vb, std::span<const mfrr::vb::CostSegment> segments) {
  const int T = vb.horizon_qh;
  Model m;
  std::vector<std::vector<int>> at(T);
  for (const auto& seg : segments) {
    const int j = m.add_col(kQhHours * seg.cost_per_mwh, 0.0, seg.cap_mw);
    at[seg.qh].push_back(j);
  }
  std::vector<Model::Term> cum;
  for (int t = 0; t < T; ++t) {
    std::vector<Model::Term> power;
    for (int j : at[t]) {
      power.push_back({j, 1.0});
      cum.push_back({j, kQhHours});
    }
    if (!power.empty()) m.add_row(-kInf, vb.p_max_mw[t], power);
    m.add_row(vb.e_min_mwh[t + 1], vb.e_max_mwh[t + 1], cum);
  }
  const auto r = mfrr::lp::DenseSimplex().solve(m);
  if (r.status != mfrr::lp::Status::Optimal) throw std::runtime_error("lp_min_cost: " + to_string(r.status));
  return r.objective;
}

double segment_cost(std::span<const double> charging_mw, std::span<const mfrr::vb::CostSegment> segments) {
  double cost = 0.0;
  for (std::size_t t = 0; t < charging_mw.size(); ++t) {
    std::vector<mfrr::vb::CostSegment> here;
    for (const auto& s : segments)
      if (s.qh == static_cast<int>(t)) here.push_back(s);
    std::sort(here.begin(), here.end(), [](auto& a, auto& b) { return a.cost_per_mwh < b.cost_per_mwh; });
    double left = charging_mw[t];
    for (const auto& s : here) {
      const double take = std::min(left, s.cap_mw);
      cost += kQhHours * take * s.cost_per_mwh;
      left -= take;
    }
    if (left > 1e-9) throw std::runtime_error("segment_cost: charging exceeds the segments");
  }
  return cost;
}

mfrr::vb::VirtualBattery random_battery(std::mt19937_64& rng, int T, double p_lo, double p_hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  mfrr::vb::VirtualBattery vb;
  vb.horizon_qh = T;
  vb.p_max_mw.resize(T);
  std::vector<double> inc(T), cum(T + 1, 0.0);
  for (int t = 0; t < T; ++t) {
    vb.p_max_mw[t] = p_lo + (p_hi - p_lo) * u(rng);
    inc[t] = kQhHours * vb.p_max_mw[t] * (0.3 + 0.7 * u(rng));
    cum[t + 1] = cum[t] + inc[t];
  }
  const double E = cum[T] * (0.4 + 0.6 * u(rng));
  vb.e_max_mwh.resize(T + 1);
  vb.e_min_mwh.resize(T + 1);
  double tail = 0.0;
  for (int t = T; t >= 0; --t) {
    vb.e_max_mwh[t] = std::min(cum[t], E);
    vb.e_min_mwh[t] = std::max(0.0, E - tail);
    if (t > 0) tail += inc[t - 1];
  }
  vb.e_min_mwh[0] = vb.e_max_mwh[0] = 0.0;
  vb.e_min_mwh[T] = vb.e_max_mwh[T] = E;
  return vb;
}

mfrr::market::DayAheadPrices random_prices(std::mt19937_64& rng, int T) {
  std::uniform_real_distribution<double> u(0.0, 120.0);
  mfrr::market::DayAheadPrices da;
  da.source = "random";
  for (int t = 0; t < T; ++t) da.eur_mwh.push_back(u(rng));
  return da;
}

std::vector<mfrr::market::MarketScenario> random_scenarios(std::mt19937_64& rng, int n,
                                                          const mfrr::market::DayAheadPrices& da) {
  const int T = static_cast<int>(da.eur_mwh.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<mfrr::market::MarketScenario> out(n);
  for (auto& s : out) {
    s.weight = 1.0 / n;
    s.states.resize(T);
    s.price_up_eur_mwh.assign(T, std::nan(""));
    s.price_dn_eur_mwh.assign(T, std::nan(""));
    for (int t = 0; t < T; ++t) {
      const double r = u(rng);
      if (r < 0.3) {
        s.states[t] = RegulationState::Up;
        s.price_up_eur_mwh[t] = da.eur_mwh[t] + 1.0 + 60.0 * u(rng);
      } else if (r < 0.7) {
        s.states[t] = RegulationState::Down;
        s.price_dn_eur_mwh[t] = da.eur_mwh[t] - 1.0 - 40.0 * u(rng);
      } else {
        s.states[t] = RegulationState::None;
      }
    }
  }
  return out;
}

double fixed_bid_value(const mfrr::vb::VirtualBattery& vb, std::span<const mfrr::market::MarketScenario> scenarios,
                       const mfrr::market::DayAheadPrices& da, const mfrr::bidding::RiskParams& risk, double fee,
                       std::span<const int> up, std::span<const int> dn, std::span<const double> p_da_fixed) {
  const int T = vb.horizon_qh;
  const double D = kQhHours, beta = risk.beta, alpha = risk.alpha;
  const bool worst = alpha >= 1.0 - 1e-12;
  double wsum = 0.0;
  for (const auto& s : scenarios) wsum += s.weight;

  // Maximize; the model minimizes the negation.
  Model m;
  std::vector<int> p(T);
  for (int t = 0; t < T; ++t) {
    const double lo = p_da_fixed.empty() ? 0.0 : p_da_fixed[t];
    const double hi = p_da_fixed.empty() ? vb.p_max_mw[t] : p_da_fixed[t];
    p[t] = m.add_col(0.0, lo, hi);
  }
  const int zeta = beta > 0.0 ? m.add_col(-beta, -kInf, kInf) : -1;

  for (const auto& s : scenarios) {
    const double w = s.weight / wsum;
    // profit = const + sum lin_j x_j
    double pconst = 0.0;
    std::vector<Model::Term> lin;
    std::vector<int> c(T), a(T), b(T);
    for (int t = 0; t < T; ++t) {
      c[t] = m.add_col(0.0, 0.0, vb.p_max_mw[t]);
      a[t] = m.add_col(0.0, 0.0, kInf);
      b[t] = m.add_col(0.0, 0.0, kInf);
    }
    for (int t = 0; t < T; ++t) {
      const bool u_on = s.states[t] == RegulationState::Up;
      const bool d_on = s.states[t] == RegulationState::Down;
      const double lam = u_on ? s.price_up_eur_mwh[t] : d_on ? s.price_dn_eur_mwh[t] : da.eur_mwh[t];
      const double instructed_bids = (u_on ? -up[t] : 0) + (d_on ? dn[t] : 0);
      // D c - D (p + bids) = a - b
      m.add_row(D * instructed_bids, D * instructed_bids, {{c[t], D}, {p[t], -D}, {a[t], -1.0}, {b[t], 1.0}});
      lin.push_back({p[t], -D * da.eur_mwh[t]});
      if (u_on) pconst += D * up[t] * s.price_up_eur_mwh[t];
      if (d_on) pconst -= D * dn[t] * s.price_dn_eur_mwh[t];
      lin.push_back({a[t], -(lam + fee)});
      lin.push_back({b[t], lam - fee});
    }
    std::vector<Model::Term> cum;
    for (int t = 0; t < T; ++t) {
      cum.push_back({c[t], D});
      m.add_row(vb.e_min_mwh[t + 1], vb.e_max_mwh[t + 1], cum);
    }
    for (const auto& term : lin) m.obj[term.col] -= (1.0 - beta) * w * term.coef;
    m.obj_offset -= (1.0 - beta) * w * pconst;
    if (zeta >= 0) {
      // eta >= zeta - profit  <=>  eta - zeta + lin x >= -pconst
      std::vector<Model::Term> row = lin;
      row.push_back({zeta, -1.0});
      if (!worst) row.push_back({m.add_col(beta * w / (1.0 - alpha), 0.0, kInf), 1.0});
      m.add_row(-pconst, kInf, row);
    }
  }
  const auto r = mfrr::lp::DenseSimplex().solve(m);
  if (r.status != mfrr::lp::Status::Optimal) throw std::runtime_error("fixed_bid_value: " + to_string(r.status));
  return -r.objective;
}

double enumerate_optimum(const mfrr::vb::VirtualBattery& vb, std::span<const mfrr::market::MarketScenario> scenarios,
                         const mfrr::market::DayAheadPrices& da, const mfrr::bidding::RiskParams& risk, double fee,
                         std::span<const double> p_da_fixed) {
  const int T = vb.horizon_qh;
  std::vector<int> up(T, 0), dn(T, 0);
  double best = -kInf;
  std::function<void(int)> rec = [&](int t) {
    if (t == T) {
      best = std::max(best, fixed_bid_value(vb, scenarios, da, risk, fee, up, dn, p_da_fixed));
      return;
    }
    for (int u = 0; 1.1 * u <= vb.p_max_mw[t] + 1e-9; ++u)
      for (int d = 0; 1.1 * (u + d) <= vb.p_max_mw[t] + 1e-9; ++d) {
        up[t] = u;
        dn[t] = d;
        rec(t + 1);
      }
    up[t] = dn[t] = 0;
  };
  rec(0);
  return best;
}

mfrr::market::StateChainParams block_chain(int blocks) {
  mfrr::market::StateChainParams chain;
  const int per = mfrr::kQhPerDay / blocks;
  for (int q = 0; q < mfrr::kQhPerDay; ++q) {
    const double k = static_cast<double>(q / per) / blocks;  // 0 .. <1 across the day
    for (int b = 0; b < mfrr::market::kDurationBins; ++b) {
      const double stay_shift = 0.05 * b;
      auto n = chain.row(q, RegulationState::None, b);
      n[1] = 0.10 + 0.10 * k;
      n[2] = 0.20 - 0.08 * k;
      n[0] = 1.0 - n[1] - n[2];
      auto u = chain.row(q, RegulationState::Up, b);
      u[1] = 0.55 - stay_shift + 0.1 * k;
      u[2] = 0.05;
      u[0] = 1.0 - u[1] - u[2];
      auto d = chain.row(q, RegulationState::Down, b);
      d[2] = 0.70 - stay_shift - 0.1 * k;
      d[1] = 0.03;
      d[0] = 1.0 - d[1] - d[2];
    }
  }
  chain.initial = {0.6, 0.15, 0.25};
  return chain;
}

SimulatedHistory simulate_history(const mfrr::market::StateChainParams& chain, int n_qh, std::uint64_t seed) {
  using mfrr::market::kDurationBins;
  using mfrr::market::kStates;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::lognormal_distribution<double> premium(std::log(15.0), 0.5);
  SimulatedHistory h;
  h.visits.assign(static_cast<std::size_t>(mfrr::kQhPerDay) * kStates * kDurationBins, 0.0);
  const std::int64_t t0 = mfrr::market::parse_timestamp_minutes("2020-01-01T00:00");
  int state = 0, sojourn = 1;
  for (int i = 0; i < n_qh; ++i) {
    mfrr::market::HistoryRecord r;
    r.minute = t0 + 15LL * i;
    r.qh_of_day = i % mfrr::kQhPerDay;
    r.lambda_da = 50.0;
    if (state == 1) r.lambda_up = 50.0 + premium(rng);
    if (state == 2) r.lambda_dn = 50.0 - premium(rng);
    h.records.push_back(r);
    if (i + 1 == n_qh) break;
    const int b = mfrr::market::duration_bin(sojourn);
    h.visits[(static_cast<std::size_t>(r.qh_of_day) * kStates + state) * kDurationBins + b] += 1.0;
    const auto row = chain.row(r.qh_of_day, static_cast<RegulationState>(state), b);
    const double x = u(rng);
    const int next = x < row[0] ? 0 : x < row[0] + row[1] ? 1 : 2;
    sojourn = next == state ? sojourn + 1 : 1;
    state = next;
  }
  return h;
}

double tail_mean(std::vector<double> profits, double alpha) {
  std::sort(profits.begin(), profits.end());
  const double n = static_cast<double>(profits.size());
  const double mass = 1.0 - alpha;
  if (mass * n <= 1e-12) return profits.front();
  double left = mass * n, sum = 0.0;
  for (double v : profits) {
    const double take = std::min(1.0, left);
    sum += take * v;
    left -= take;
    if (left <= 1e-12) break;
  }
  return sum / (mass * n);
}

}  // namespace oracle
