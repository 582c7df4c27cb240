#include "mfrr/market.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mfrr/common.hpp"
#include "mfrr/csv.hpp"

namespace mfrr::market {
namespace {

constexpr int kRowsPerQh = kStates * kDurationBins;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr int idx(RegulationState s) { return static_cast<int>(s); }
RegulationState state_of(int i) { return static_cast<RegulationState>(i); }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int draw_categorical(std::mt19937_64& rng, std::span<const double, kStates> p) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (int k = 0; k < kStates; ++k) {
    acc += p[k];
    if (u < acc) return k;
  }
  for (int k = kStates - 1; k >= 0; --k)
    if (p[k] > 0.0) return k;
  return 0;
}

// Argmax with ties resolved None, Down, Up.
int argmax_state(std::span<const double, kStates> p) {
  static constexpr int order[] = {idx(RegulationState::None), idx(RegulationState::Down),
                                  idx(RegulationState::Up)};
  int best = order[0];
  for (int k : order)
    if (p[k] > p[best]) best = k;
  return best;
}

int qh_of_day_at(int start_qh_of_day, int t) { return (start_qh_of_day + t) % kQhPerDay; }

double step(const PremiumProcess& p, double y, double eps) { return p.mu_log + p.phi * (y - p.mu_log) + eps; }

void check_process(const PremiumProcess& p, const char* name) {
  if (!(p.phi > 0.0 && p.phi < 1.0)) throw InputError(std::string("premium ") + name + ": phi must lie in (0,1)");
  if (p.residual_pool.empty()) throw InputError(std::string("premium ") + name + ": empty residual pool");
  for (double v : p.residual_pool)
    if (!std::isfinite(v)) throw InputError(std::string("premium ") + name + ": non-finite residual");
  if (!std::isfinite(p.mu_log) || !std::isfinite(p.init_log))
    throw InputError(std::string("premium ") + name + ": non-finite level");
}

// Standard normal quantile by bisection on the CDF.
double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> normal_pool(double sigma, int k) {
  std::vector<double> pool(k);
  for (int i = 0; i < k; ++i) pool[i] = sigma * normal_quantile((i + 0.5) / k);
  return pool;
}

// Marks the floor(q * n) largest values for removal (ties: earliest first).
std::vector<char> upper_trim_mask(std::span<const double> values, double q) {
  const std::size_t n = values.size();
  const auto n_trim = static_cast<std::size_t>(std::floor(q * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<char> keep(n, 1);
  for (std::size_t k = 0; k < n_trim; ++k) keep[order[k]] = 0;
  return keep;
}

struct PremiumFit {
  PremiumProcess process;
  std::size_t trimmed = 0;
  bool degenerate = false;
};

// Fits the AR(1) on log premia observed at the given minutes.
PremiumFit fit_premium(const std::vector<std::int64_t>& minutes, const std::vector<double>& premia,
                       const CalibrationOptions& opt, const char* name) {
  if (premia.size() < 10)
    throw InputError(std::string("calibrate: fewer than 10 ") + name + " premium observations");
  PremiumFit fit;
  const std::size_t n = premia.size();
  const std::vector<char> keep = upper_trim_mask(premia, opt.trim_quantile);
  fit.trimmed = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 0));

  std::vector<double> y;
  std::vector<std::int64_t> ym;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) {
      y.push_back(std::log(premia[i]));
      ym.push_back(minutes[i]);
    }
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

  std::vector<double> xs, zs;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (ym[i] - ym[i - 1] == 15) {
      xs.push_back(y[i - 1]);
      zs.push_back(y[i]);
    }
  double sxx = 0.0, sxz = 0.0, xbar = 0.0, zbar = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xbar += xs[i];
    zbar += zs[i];
  }
  if (!xs.empty()) {
    xbar /= static_cast<double>(xs.size());
    zbar /= static_cast<double>(xs.size());
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxz += (xs[i] - xbar) * (zs[i] - zbar);
  }

  PremiumProcess& p = fit.process;
  std::vector<double> resid;
  if (xs.size() >= 10 && sxx > 1e-12 * static_cast<double>(xs.size()) * (1.0 + xbar * xbar)) {
    const double phi = sxz / sxx;
    if (phi > 0.01 && phi < 0.99) {
      p.phi = phi;
      p.mu_log = (zbar - phi * xbar) / (1.0 - phi);
    } else {
      p.phi = std::clamp(phi, 0.01, 0.99);
      p.mu_log = mean;
      fit.degenerate = true;
    }
    for (std::size_t i = 0; i < xs.size(); ++i) resid.push_back(zs[i] - step(p, xs[i], 0.0));
  } else {
    // Too few one-step pairs or a constant series: keep the level, take the
    // default persistence and scale deviations to its innovation size.
    p.phi = opt.default_phi;
    p.mu_log = mean;
    fit.degenerate = true;
    const double scale = std::sqrt(1.0 - p.phi * p.phi);
    for (double v : y) resid.push_back((v - mean) * scale);
  }
  p.residual_pool = trim_upper(resid, opt.trim_quantile);
  if (p.residual_pool.empty()) p.residual_pool = {0.0};
  p.init_log = p.mu_log;
  return fit;
}

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

int parse_digits(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
  int v = 0;
  if (pos + len > s.size()) throw InputError("bad timestamp '" + std::string(whole) + "'");
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
  if (ec != std::errc() || p != s.data() + pos + len) throw InputError("bad timestamp '" + std::string(whole) + "'");
  return v;
}

std::optional<double> optional_field(const std::string& f, const std::string& ctx) {
  if (f.empty()) return std::nullopt;
  return csv::to_double(f, ctx);
}

const std::array<double, 24> kDuckHourly = {0.15, 2.0,  10.0, 30.0, 60.0, 85.0, 95.0, 90.0,
                                            75.0, 60.0, 50.0, 45.0, 42.0, 40.0, 40.0, 42.0,
                                            48.0, 60.0, 70.0, 60.0, 35.0, 15.0, 5.0,  1.0};
const std::array<double, 24> kDoublePeakHourly = {60.0, 58.0, 62.0,  80.0,  110.0, 137.0, 125.0, 100.0,
                                                  85.0, 72.0, 65.0,  58.0,  55.0,  53.0,  52.0,  55.0,
                                                  68.0, 100.0, 138.0, 120.0, 95.0, 80.0,  70.0,  64.0};

}  // namespace

std::string_view to_string(RegulationState s) {
  switch (s) {
    case RegulationState::Up: return "up";
    case RegulationState::Down: return "down";
    case RegulationState::None: break;
  }
  return "none";
}

RegulationState parse_state(std::string_view s) {
  if (s == "up") return RegulationState::Up;
  if (s == "down") return RegulationState::Down;
  if (s == "none") return RegulationState::None;
  throw InputError("unknown regulation state '" + std::string(s) + "'");
}

StateChainParams::StateChainParams() : transition(static_cast<std::size_t>(kQhPerDay) * kRowsPerQh * kStates, 0.0) {
  for (int q = 0; q < kQhPerDay; ++q)
    for (int s = 0; s < kStates; ++s)
      for (int b = 0; b < kDurationBins; ++b) row(q, state_of(s), b)[s] = 1.0;
}

std::span<double, kStates> StateChainParams::row(int qh_of_day, RegulationState from, int bin) {
  const std::size_t off = ((static_cast<std::size_t>(qh_of_day) * kStates + idx(from)) * kDurationBins + bin) * kStates;
  return std::span<double, kStates>(transition.data() + off, kStates);
}

std::span<const double, kStates> StateChainParams::row(int qh_of_day, RegulationState from, int bin) const {
  const std::size_t off = ((static_cast<std::size_t>(qh_of_day) * kStates + idx(from)) * kDurationBins + bin) * kStates;
  return std::span<const double, kStates>(transition.data() + off, kStates);
}

StateChainParams StateChainParams::absorbing(RegulationState s) {
  StateChainParams c;
  std::fill(c.transition.begin(), c.transition.end(), 0.0);
  for (int q = 0; q < kQhPerDay; ++q)
    for (int f = 0; f < kStates; ++f)
      for (int b = 0; b < kDurationBins; ++b) c.row(q, state_of(f), b)[idx(s)] = 1.0;
  c.initial = {0.0, 0.0, 0.0};
  c.initial[idx(s)] = 1.0;
  return c;
}

void validate(const StateChainParams& chain) {
  if (chain.transition.size() != static_cast<std::size_t>(kQhPerDay) * kRowsPerQh * kStates)
    throw InputError("state chain: transition table has wrong size");
  auto check = [](std::span<const double, kStates> p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0 && v <= 1.0)) throw InputError("state chain: " + what + " has an entry outside [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InputError("state chain: " + what + " does not sum to 1");
  };
  check(chain.initial, "initial distribution");
  for (int q = 0; q < kQhPerDay; ++q)
    for (int s = 0; s < kStates; ++s)
      for (int b = 0; b < kDurationBins; ++b)
        check(chain.row(q, state_of(s), b), "row (qh " + std::to_string(q) + ", " +
                                                std::string(to_string(state_of(s))) + ", bin " +
                                                std::to_string(b) + ")");
}

void validate(const PremiumModelParams& prem) {
  check_process(prem.up, "up");
  check_process(prem.dn, "down");
}

std::int64_t parse_timestamp_minutes(std::string_view ts) {
  const int y = parse_digits(ts, 0, 4, ts);
  const int mo = parse_digits(ts, 5, 2, ts);
  const int d = parse_digits(ts, 8, 2, ts);
  const int h = parse_digits(ts, 11, 2, ts);
  const int mi = parse_digits(ts, 14, 2, ts);
  if (ts[4] != '-' || ts[7] != '-' || (ts[10] != 'T' && ts[10] != ' ') || ts[13] != ':' || mo < 1 || mo > 12 ||
      d < 1 || d > 31 || h > 23 || mi > 59)
    throw InputError("bad timestamp '" + std::string(ts) + "'");
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 1440 + h * 60 + mi;
}

std::vector<HistoryRecord> read_history_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const auto cts = t.column("timestamp_iso8601"), cda = t.column("lambda_da"), cup = t.column("lambda_up"),
             cdn = t.column("lambda_dn");
  std::vector<HistoryRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string ctx = path.string() + " row " + std::to_string(i + 1);
    HistoryRecord h;
    h.minute = parse_timestamp_minutes(r[cts]);
    const auto mod = ((h.minute % 1440) + 1440) % 1440;
    if (mod % 15 != 0) throw InputError(ctx + ": timestamp is not on a quarter-hour");
    h.qh_of_day = static_cast<int>(mod / 15);
    h.lambda_da = csv::to_double(r[cda], ctx);
    h.lambda_up = optional_field(r[cup], ctx);
    h.lambda_dn = optional_field(r[cdn], ctx);
    out.push_back(h);
  }
  return out;
}

RegulationState infer_state(const HistoryRecord& r, bool* both) {
  if (both) *both = r.lambda_up && r.lambda_dn;
  if (r.lambda_up && r.lambda_dn) {
    const double pu = std::abs(*r.lambda_up - r.lambda_da), pd = std::abs(r.lambda_da - *r.lambda_dn);
    return pu >= pd ? RegulationState::Up : RegulationState::Down;
  }
  if (r.lambda_up) return RegulationState::Up;
  if (r.lambda_dn) return RegulationState::Down;
  return RegulationState::None;
}

std::vector<double> trim_upper(std::span<const double> values, double q) {
  const std::vector<char> keep = upper_trim_mask(values, q);
  std::vector<double> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (keep[i]) out.push_back(values[i]);
  return out;
}

Calibration calibrate(std::span<const HistoryRecord> history_in, const CalibrationOptions& opt) {
  if (!(opt.trim_quantile >= 0.0 && opt.trim_quantile <= 0.1))
    throw InputError("calibrate: trim_quantile must lie in [0, 0.1]");
  if (opt.tod_blocks < 1 || opt.tod_blocks > kQhPerDay || kQhPerDay % opt.tod_blocks != 0)
    throw InputError("calibrate: tod_blocks must divide 96");
  if (!(opt.default_phi > 0.0 && opt.default_phi < 1.0)) throw InputError("calibrate: default_phi must lie in (0,1)");
  std::vector<HistoryRecord> history(history_in.begin(), history_in.end());
  std::stable_sort(history.begin(), history.end(),
                   [](const HistoryRecord& a, const HistoryRecord& b) { return a.minute < b.minute; });
  if (history.empty() || history.back().minute - history.front().minute + 15 < 1440)
    throw InputError("calibrate: history must cover at least one full day");

  Calibration cal;
  CalibrationReport& rep = cal.report;
  rep.records = history.size();

  std::vector<RegulationState> states(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) {
    bool both = false;
    states[i] = infer_state(history[i], &both);
    rep.both_directions += both;
  }

  const int qh_per_block = kQhPerDay / opt.tod_blocks;
  std::vector<double> cell(static_cast<std::size_t>(opt.tod_blocks) * kRowsPerQh * kStates, 0.0);
  std::vector<double> pooled(static_cast<std::size_t>(kRowsPerQh) * kStates, 0.0);
  std::vector<double> pooled_state(static_cast<std::size_t>(kStates) * kStates, 0.0);
  int sojourn = 1;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i].minute - history[i - 1].minute != 15) {
      sojourn = 1;
      continue;
    }
    const int from = idx(states[i - 1]), to = idx(states[i]);
    const int b = duration_bin(sojourn);
    const int block = history[i - 1].qh_of_day / qh_per_block;
    cell[((static_cast<std::size_t>(block) * kStates + from) * kDurationBins + b) * kStates + to] += 1.0;
    pooled[(static_cast<std::size_t>(from) * kDurationBins + b) * kStates + to] += 1.0;
    pooled_state[static_cast<std::size_t>(from) * kStates + to] += 1.0;
    ++rep.transitions;
    sojourn = states[i] == states[i - 1] ? sojourn + 1 : 1;
  }

  auto laplace = [](const double* counts, std::span<double, kStates> out) {
    const double n = counts[0] + counts[1] + counts[2];
    for (int k = 0; k < kStates; ++k) out[k] = (counts[k] + 1.0) / (n + kStates);
    return n;
  };
  for (int blk = 0; blk < opt.tod_blocks; ++blk)
    for (int s = 0; s < kStates; ++s)
      for (int b = 0; b < kDurationBins; ++b) {
        std::array<double, kStates> p{};
        const double* c = &cell[((static_cast<std::size_t>(blk) * kStates + s) * kDurationBins + b) * kStates];
        if (laplace(c, p) == 0.0) {
          ++rep.empty_cells;
          if (laplace(&pooled[(static_cast<std::size_t>(s) * kDurationBins + b) * kStates], p) == 0.0)
            laplace(&pooled_state[static_cast<std::size_t>(s) * kStates], p);
        }
        for (int q = blk * qh_per_block; q < (blk + 1) * qh_per_block; ++q) {
          auto r = cal.chain.row(q, state_of(s), b);
          std::copy(p.begin(), p.end(), r.begin());
        }
      }

  const int start_q = ((static_cast<int>(std::lround(opt.horizon_start_h / kQhHours)) % kQhPerDay) + kQhPerDay) % kQhPerDay;
  std::array<double, kStates> init_counts{}, all_counts{};
  for (std::size_t i = 0; i < history.size(); ++i) {
    all_counts[idx(states[i])] += 1.0;
    if (history[i].qh_of_day == start_q) init_counts[idx(states[i])] += 1.0;
  }
  const bool have_start = init_counts[0] + init_counts[1] + init_counts[2] > 0.0;
  laplace(have_start ? init_counts.data() : all_counts.data(), cal.chain.initial);

  std::vector<std::int64_t> m_up, m_dn;
  std::vector<double> p_up, p_dn;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    if (states[i] == RegulationState::Up) {
      const double p = *h.lambda_up - h.lambda_da;
      if (p > 0.0) {
        m_up.push_back(h.minute);
        p_up.push_back(p);
      } else {
        ++rep.nonpositive_premia;
      }
    } else if (states[i] == RegulationState::Down) {
      const double p = h.lambda_da - *h.lambda_dn;
      if (p > 0.0) {
        m_dn.push_back(h.minute);
        p_dn.push_back(p);
      } else {
        ++rep.nonpositive_premia;
      }
    }
  }
  PremiumFit fu = fit_premium(m_up, p_up, opt, "up");
  PremiumFit fd = fit_premium(m_dn, p_dn, opt, "down");
  cal.premia.up = std::move(fu.process);
  cal.premia.dn = std::move(fd.process);
  rep.trimmed_up = fu.trimmed;
  rep.trimmed_dn = fd.trimmed;
  rep.phi_up_degenerate = fu.degenerate;
  rep.phi_dn_degenerate = fd.degenerate;
  return cal;
}

Calibration bundled_defaults() {
  Calibration cal;
  StateChainParams& c = cal.chain;
  const auto none = RegulationState::None, up = RegulationState::Up, dn = RegulationState::Down;
  for (int q = 0; q < kQhPerDay; ++q) {
    const double h = q * kQhHours;
    const bool night = h >= 22.0 || h < 6.0;
    const bool midday = h >= 10.0 && h < 15.0;
    const bool peak = (h >= 16.0 && h < 20.0) || (h >= 6.0 && h < 9.0);
    const double to_dn = (night || midday) ? 0.14 : 0.12;
    const double to_up = peak ? 0.035 : 0.03;
    static constexpr double stay_dn[kDurationBins] = {0.82, 0.80, 0.78, 0.76};
    static constexpr double stay_up[kDurationBins] = {0.60, 0.55, 0.50, 0.45};
    for (int b = 0; b < kDurationBins; ++b) {
      auto rn = c.row(q, none, b);
      rn[idx(none)] = 1.0 - to_dn - to_up;
      rn[idx(up)] = to_up;
      rn[idx(dn)] = to_dn;
      auto rd = c.row(q, dn, b);
      rd[idx(dn)] = stay_dn[b];
      rd[idx(up)] = 0.01;
      rd[idx(none)] = 1.0 - stay_dn[b] - 0.01;
      auto ru = c.row(q, up, b);
      ru[idx(up)] = stay_up[b];
      ru[idx(dn)] = 0.01;
      ru[idx(none)] = 1.0 - stay_up[b] - 0.01;
    }
  }
  c.initial = {0.7, 0.1, 0.2};
  cal.premia.up = PremiumProcess{std::log(25.0), 0.85, normal_pool(0.45, 200), std::log(25.0)};
  cal.premia.dn = PremiumProcess{std::log(12.0), 0.85, normal_pool(0.40, 200), std::log(12.0)};
  return cal;
}

std::vector<MarketScenario> sample_scenarios(const StateChainParams& chain, const PremiumModelParams& prem,
                                             const DayAheadPrices& da, int n, std::uint64_t seed,
                                             int start_qh_of_day) {
  if (n < 1) throw InputError("sample_scenarios: n must be >= 1");
  if (start_qh_of_day < 0 || start_qh_of_day >= kQhPerDay) throw InputError("sample_scenarios: bad start QH");
  validate(chain);
  validate(prem);
  const int T = static_cast<int>(da.eur_mwh.size());
  if (T < 1) throw InputError("sample_scenarios: empty day-ahead price series");

  std::vector<MarketScenario> out(static_cast<std::size_t>(n));
  const auto& pool_up = prem.up.residual_pool;
  const auto& pool_dn = prem.dn.residual_pool;
  for (int w = 0; w < n; ++w) {
    std::mt19937_64 rng(substream_seed(seed, static_cast<std::uint64_t>(w)));
    std::uniform_int_distribution<std::size_t> pick_up(0, pool_up.size() - 1), pick_dn(0, pool_dn.size() - 1);
    MarketScenario& sc = out[w];
    sc.states.resize(T);
    sc.price_up_eur_mwh.assign(T, kNaN);
    sc.price_dn_eur_mwh.assign(T, kNaN);
    sc.weight = 1.0 / n;
    double yu = prem.up.init_log, yd = prem.dn.init_log;
    int state = 0, sojourn = 1;
    for (int t = 0; t < T; ++t) {
      if (t == 0) {
        state = draw_categorical(rng, chain.initial);
      } else {
        const int next = draw_categorical(
            rng, chain.row(qh_of_day_at(start_qh_of_day, t - 1), state_of(state), duration_bin(sojourn)));
        sojourn = next == state ? sojourn + 1 : 1;
        state = next;
        yu = step(prem.up, yu, pool_up[pick_up(rng)]);
        yd = step(prem.dn, yd, pool_dn[pick_dn(rng)]);
      }
      sc.states[t] = state_of(state);
      if (sc.states[t] == RegulationState::Up) sc.price_up_eur_mwh[t] = da.eur_mwh[t] + std::exp(yu);
      if (sc.states[t] == RegulationState::Down) sc.price_dn_eur_mwh[t] = da.eur_mwh[t] - std::exp(yd);
    }
  }
  return out;
}

MarketScenario most_likely_path(const StateChainParams& chain, const PremiumModelParams& prem,
                                const DayAheadPrices& da, int start_qh_of_day) {
  validate(chain);
  validate(prem);
  const int T = static_cast<int>(da.eur_mwh.size());
  MarketScenario sc;
  sc.states.resize(T);
  sc.price_up_eur_mwh.assign(T, kNaN);
  sc.price_dn_eur_mwh.assign(T, kNaN);
  double yu = prem.up.init_log, yd = prem.dn.init_log;
  int state = 0, sojourn = 1;
  for (int t = 0; t < T; ++t) {
    if (t == 0) {
      state = argmax_state(chain.initial);
    } else {
      const int next =
          argmax_state(chain.row(qh_of_day_at(start_qh_of_day, t - 1), state_of(state), duration_bin(sojourn)));
      sojourn = next == state ? sojourn + 1 : 1;
      state = next;
      yu = step(prem.up, yu, 0.0);
      yd = step(prem.dn, yd, 0.0);
    }
    sc.states[t] = state_of(state);
    if (sc.states[t] == RegulationState::Up) sc.price_up_eur_mwh[t] = da.eur_mwh[t] + std::exp(yu);
    if (sc.states[t] == RegulationState::Down) sc.price_dn_eur_mwh[t] = da.eur_mwh[t] - std::exp(yd);
  }
  return sc;
}

void validate_scenarios(std::span<const MarketScenario> scenarios, const DayAheadPrices& da) {
  if (scenarios.empty()) throw InputError("scenario set is empty");
  const std::size_t T = da.eur_mwh.size();
  double wsum = 0.0;
  for (std::size_t w = 0; w < scenarios.size(); ++w) {
    const auto& s = scenarios[w];
    const std::string where = "scenario " + std::to_string(w);
    if (s.states.size() != T || s.price_up_eur_mwh.size() != T || s.price_dn_eur_mwh.size() != T)
      throw InputError(where + ": horizon does not match the day-ahead prices");
    if (!(s.weight >= 0.0)) throw InputError(where + ": negative weight");
    wsum += s.weight;
    for (std::size_t t = 0; t < T; ++t) {
      const std::string at = where + ", qh " + std::to_string(t);
      if (s.states[t] == RegulationState::Up) {
        if (!std::isfinite(s.price_up_eur_mwh[t])) throw InputError(at + ": up activation without a price");
        if (s.price_up_eur_mwh[t] < da.eur_mwh[t]) throw InputError(at + ": up price below day-ahead price");
      }
      if (s.states[t] == RegulationState::Down) {
        if (!std::isfinite(s.price_dn_eur_mwh[t])) throw InputError(at + ": down activation without a price");
        if (s.price_dn_eur_mwh[t] > da.eur_mwh[t]) throw InputError(at + ": down price above day-ahead price");
      }
    }
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw InputError("scenario weights do not sum to 1");
}

DayAheadPrices read_day_ahead_csv(const std::filesystem::path& path, int horizon_qh) {
  const csv::Table t = csv::read(path);
  const auto col = t.column("lambda_da");
  std::vector<double> v;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    v.push_back(csv::to_double(t.rows[i][col], path.string() + " row " + std::to_string(i + 1)));
  DayAheadPrices da;
  da.source = path.filename().string();
  {
    // Label line written by day_ahead_to_csv.
    std::ifstream in(path);
    std::string first;
    constexpr std::string_view tag = "# source: ";
    if (std::getline(in, first) && first.starts_with(tag)) {
      while (!first.empty() && (first.back() == '\r' || first.back() == ' ')) first.pop_back();
      da.source = first.substr(tag.size());
    }
  }
  if (static_cast<int>(v.size()) == horizon_qh) {
    da.eur_mwh = std::move(v);
  } else if (static_cast<int>(v.size()) * 4 == horizon_qh) {
    for (double p : v) da.eur_mwh.insert(da.eur_mwh.end(), 4, p);
  } else {
    throw InputError(path.string() + ": expected " + std::to_string(horizon_qh) + " quarter-hourly or " +
                     std::to_string(horizon_qh / 4) + " hourly prices, got " + std::to_string(v.size()));
  }
  for (double p : da.eur_mwh)
    if (!std::isfinite(p)) throw InputError(path.string() + ": non-finite price");
  return da;
}

std::string day_ahead_to_csv(const DayAheadPrices& da) {
  std::ostringstream os;
  os << "# source: " << da.source << "\n";
  os << "timestamp,lambda_da\n";
  for (std::size_t t = 0; t < da.eur_mwh.size(); ++t) {
    const int minutes = static_cast<int>((13 * 60 + 15 * t) % 1440);
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
    os << buf << ',' << csv::format(da.eur_mwh[t]) << '\n';
  }
  return os.str();
}

DayAheadPrices synthetic_day_ahead(std::string_view shape, int horizon_qh) {
  const std::array<double, 24>* hourly = nullptr;
  if (shape == "duck_curve") hourly = &kDuckHourly;
  else if (shape == "double_peak") hourly = &kDoublePeakHourly;
  else throw InputError("unknown synthetic price shape '" + std::string(shape) + "'");
  DayAheadPrices da;
  da.source = "synthetic:" + std::string(shape);
  da.eur_mwh.resize(horizon_qh);
  for (int t = 0; t < horizon_qh; ++t) da.eur_mwh[t] = (*hourly)[(t / 4) % 24];
  return da;
}

std::string scenarios_to_csv(std::span<const MarketScenario> scenarios) {
  std::string out = "scenario_id,qh,state,price_up,price_dn\n";
  for (std::size_t w = 0; w < scenarios.size(); ++w) {
    const auto& s = scenarios[w];
    for (int t = 0; t < s.horizon_qh(); ++t) {
      out += std::to_string(w);
      out += ',';
      out += std::to_string(t);
      out += ',';
      out += to_string(s.states[t]);
      out += ',';
      if (std::isfinite(s.price_up_eur_mwh[t])) out += csv::format(s.price_up_eur_mwh[t]);
      out += ',';
      if (std::isfinite(s.price_dn_eur_mwh[t])) out += csv::format(s.price_dn_eur_mwh[t]);
      out += '\n';
    }
  }
  return out;
}

std::vector<MarketScenario> read_scenarios_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const auto cid = t.column("scenario_id"), cq = t.column("qh"), cs = t.column("state"), cu = t.column("price_up"),
             cd = t.column("price_dn");
  std::vector<MarketScenario> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string ctx = path.string() + " row " + std::to_string(i + 1);
    const long long id = csv::to_int(r[cid], ctx), q = csv::to_int(r[cq], ctx);
    if (id == static_cast<long long>(out.size())) out.emplace_back();
    if (out.empty() || id != static_cast<long long>(out.size()) - 1)
      throw InputError(ctx + ": scenario ids must be contiguous from 0");
    MarketScenario& s = out.back();
    if (q != s.horizon_qh()) throw InputError(ctx + ": qh indices must be contiguous from 0");
    s.states.push_back(parse_state(r[cs]));
    s.price_up_eur_mwh.push_back(r[cu].empty() ? kNaN : csv::to_double(r[cu], ctx));
    s.price_dn_eur_mwh.push_back(r[cd].empty() ? kNaN : csv::to_double(r[cd], ctx));
  }
  if (out.empty()) throw InputError(path.string() + ": no scenarios");
  for (auto& s : out) {
    if (s.horizon_qh() != out.front().horizon_qh()) throw InputError(path.string() + ": scenarios differ in length");
    s.weight = 1.0 / static_cast<double>(out.size());
  }
  return out;
}

std::string scenario_set_hash(std::span<const MarketScenario> scenarios) {
  Fnv1a h;
  h.update(static_cast<std::int64_t>(scenarios.size()));
  for (const auto& s : scenarios) {
    h.update(static_cast<std::int64_t>(s.horizon_qh()));
    h.update(s.weight);
    for (int t = 0; t < s.horizon_qh(); ++t) {
      h.update(static_cast<std::int64_t>(idx(s.states[t])));
      h.update(std::isfinite(s.price_up_eur_mwh[t]) ? s.price_up_eur_mwh[t] : 0.0);
      h.update(std::isfinite(s.price_dn_eur_mwh[t]) ? s.price_dn_eur_mwh[t] : 0.0);
    }
  }
  return h.hex();
}

namespace {

nlohmann::json process_json(const PremiumProcess& p) {
  return {{"mu_log", p.mu_log}, {"phi", p.phi}, {"init_log", p.init_log}, {"residual_pool", p.residual_pool}};
}

PremiumProcess process_from(const nlohmann::json& j) {
  PremiumProcess p;
  p.mu_log = j.at("mu_log").get<double>();
  p.phi = j.at("phi").get<double>();
  p.init_log = j.at("init_log").get<double>();
  p.residual_pool = j.at("residual_pool").get<std::vector<double>>();
  return p;
}

}  // namespace

std::string calibration_to_json(const Calibration& cal) {
  const auto& r = cal.report;
  nlohmann::json j;
  j["chain"] = {{"qh_per_day", kQhPerDay},
                {"states", {"none", "up", "down"}},
                {"duration_bins", {"1", "2", "3", "4+"}},
                {"layout", "transition[qh_of_day][from][duration_bin][to]"},
                {"initial", cal.chain.initial},
                {"transition", cal.chain.transition}};
  j["premia"] = {{"up", process_json(cal.premia.up)}, {"down", process_json(cal.premia.dn)}};
  j["report"] = {{"records", r.records},
                 {"transitions", r.transitions},
                 {"both_directions", r.both_directions},
                 {"nonpositive_premia", r.nonpositive_premia},
                 {"trimmed_up", r.trimmed_up},
                 {"trimmed_down", r.trimmed_dn},
                 {"empty_cells", r.empty_cells},
                 {"phi_up_degenerate", r.phi_up_degenerate},
                 {"phi_down_degenerate", r.phi_dn_degenerate}};
  return j.dump(1) + "\n";
}

Calibration calibration_from_json(std::string_view text) {
  Calibration cal;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& c = j.at("chain");
    cal.chain.transition = c.at("transition").get<std::vector<double>>();
    const auto init = c.at("initial").get<std::vector<double>>();
    if (init.size() != kStates) throw InputError("calibration: initial distribution must have 3 entries");
    std::copy(init.begin(), init.end(), cal.chain.initial.begin());
    cal.premia.up = process_from(j.at("premia").at("up"));
    cal.premia.dn = process_from(j.at("premia").at("down"));
    if (j.contains("report")) {
      const auto& r = j["report"];
      cal.report.records = r.value("records", std::size_t{0});
      cal.report.transitions = r.value("transitions", std::size_t{0});
      cal.report.both_directions = r.value("both_directions", std::size_t{0});
      cal.report.nonpositive_premia = r.value("nonpositive_premia", std::size_t{0});
      cal.report.trimmed_up = r.value("trimmed_up", std::size_t{0});
      cal.report.trimmed_dn = r.value("trimmed_down", std::size_t{0});
      cal.report.empty_cells = r.value("empty_cells", std::size_t{0});
      cal.report.phi_up_degenerate = r.value("phi_up_degenerate", false);
      cal.report.phi_dn_degenerate = r.value("phi_down_degenerate", false);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("calibration: ") + e.what());
  }
  validate(cal.chain);
  validate(cal.premia);
  return cal;
}

}  // namespace mfrr::market
