#include "mfrr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "mfrr/common.hpp"
#include "mfrr/csv.hpp"

namespace mfrr::config {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double as_double(std::string_view key, std::string_view v) { return csv::to_double(v, std::string(key)); }

long long as_int(std::string_view key, std::string_view v) { return csv::to_int(v, std::string(key)); }

std::uint64_t as_u64(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw InputError(std::string(key) + ": not an unsigned integer: '" + std::string(v) + "'");
  return x;
}

std::filesystem::path as_path(std::string_view v, const std::filesystem::path& base) {
  if (v.empty()) return {};
  std::filesystem::path p{std::string(v)};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

std::string engine_name(bidding::Engine e) {
  switch (e) {
    case bidding::Engine::Simplex: return "simplex";
    case bidding::Engine::InteriorPoint: return "interior_point";
    case bidding::Engine::Auto: break;
  }
  return "auto";
}

std::string modes_text(const std::vector<bidding::Mode>& modes) {
  std::string out;
  for (auto m : modes) {
    if (!out.empty()) out += ",";
    out += bidding::to_string(m);
  }
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view, const std::filesystem::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MFRR_DOUBLE_KEY(name, field)                                                                          \
  Key{name, [](RunConfig& c, std::string_view v, const std::filesystem::path&) { c.field = as_double(name, v); }, \
      [](const RunConfig& c) { return csv::format(c.field); }}

const std::vector<Key>& table() {
  static const std::vector<Key> keys = {
      Key{"n_vehicles",
          [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
            c.fleet.n_vehicles = static_cast<int>(as_int("n_vehicles", v));
          },
          [](const RunConfig& c) { return std::to_string(c.fleet.n_vehicles); }},
      MFRR_DOUBLE_KEY("energy_lognormal_mu", fleet.energy_lognormal_mu),
      MFRR_DOUBLE_KEY("energy_lognormal_sigma", fleet.energy_lognormal_sigma),
      MFRR_DOUBLE_KEY("arrival_mean_h", fleet.arrival_mean_h),
      MFRR_DOUBLE_KEY("arrival_sd_h", fleet.arrival_sd_h),
      MFRR_DOUBLE_KEY("departure_mean_h", fleet.departure_mean_h),
      MFRR_DOUBLE_KEY("departure_sd_h", fleet.departure_sd_h),
      MFRR_DOUBLE_KEY("power_kw", fleet.power_kw),
      Key{"sessions_path",
          [](RunConfig& c, std::string_view v, const std::filesystem::path& b) { c.sessions_path = as_path(v, b); },
          [](const RunConfig& c) { return c.sessions_path.string(); }},
      Key{"history_path",
          [](RunConfig& c, std::string_view v, const std::filesystem::path& b) { c.history_path = as_path(v, b); },
          [](const RunConfig& c) { return c.history_path.string(); }},
      Key{"day_ahead_path",
          [](RunConfig& c, std::string_view v, const std::filesystem::path& b) { c.day_ahead_path = as_path(v, b); },
          [](const RunConfig& c) { return c.day_ahead_path.string(); }},
      Key{"price_day", [](RunConfig& c, std::string_view v, const std::filesystem::path&) { c.price_day = v; },
          [](const RunConfig& c) { return c.price_day; }},
      MFRR_DOUBLE_KEY("trim_quantile", calibration.trim_quantile),
      Key{"tod_blocks",
          [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
            c.calibration.tod_blocks = static_cast<int>(as_int("tod_blocks", v));
          },
          [](const RunConfig& c) { return std::to_string(c.calibration.tod_blocks); }},
      Key{"chain_override",
          [](RunConfig& c, std::string_view v, const std::filesystem::path&) { c.chain_override = v; },
          [](const RunConfig& c) { return c.chain_override; }},
      Key{"n_scenarios",
          [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
            c.n_scenarios = static_cast<int>(as_int("n_scenarios", v));
          },
          [](const RunConfig& c) { return std::to_string(c.n_scenarios); }},
      Key{"seed", [](RunConfig& c, std::string_view v, const std::filesystem::path&) { c.seed = as_u64("seed", v); },
          [](const RunConfig& c) { return std::to_string(c.seed); }},
      MFRR_DOUBLE_KEY("beta", risk.beta),
      MFRR_DOUBLE_KEY("alpha", risk.alpha),
      MFRR_DOUBLE_KEY("fee_eur_mwh", fee_eur_mwh),
      Key{"modes",
          [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
            c.modes.clear();
            if (v == "both") {
              c.modes = {bidding::Mode::Independent, bidding::Mode::Cooptimized};
              return;
            }
            std::size_t pos = 0;
            while (pos <= v.size()) {
              auto end = v.find(',', pos);
              if (end == std::string_view::npos) end = v.size();
              c.modes.push_back(bidding::parse_mode(trim(v.substr(pos, end - pos))));
              pos = end + 1;
            }
          },
          [](const RunConfig& c) { return modes_text(c.modes); }},
      Key{"engine",
          [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
            if (v == "auto") c.solver.engine = bidding::Engine::Auto;
            else if (v == "simplex") c.solver.engine = bidding::Engine::Simplex;
            else if (v == "interior_point") c.solver.engine = bidding::Engine::InteriorPoint;
            else throw InputError("engine: expected auto, simplex or interior_point, got '" + std::string(v) + "'");
          },
          [](const RunConfig& c) { return engine_name(c.solver.engine); }},
      MFRR_DOUBLE_KEY("time_limit_s", solver.time_limit_s),
      MFRR_DOUBLE_KEY("rel_gap", solver.rel_gap),
      Key{"max_nodes",
          [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
            c.solver.max_nodes = as_int("max_nodes", v);
          },
          [](const RunConfig& c) { return std::to_string(c.solver.max_nodes); }},
      Key{"output_dir",
          [](RunConfig& c, std::string_view v, const std::filesystem::path& b) { c.output_dir = as_path(v, b); },
          [](const RunConfig& c) { return c.output_dir.string(); }},
  };
  return keys;
}

#undef MFRR_DOUBLE_KEY

}  // namespace

void validate(const RunConfig& cfg) {
  fleet::validate_spec(cfg.fleet);
  for (const auto* p : {&cfg.sessions_path, &cfg.history_path, &cfg.day_ahead_path})
    if (!p->empty() && !std::filesystem::exists(*p)) throw InputError("file not found: " + p->string());
  if (cfg.day_ahead_path.empty() && cfg.price_day != "duck_curve" && cfg.price_day != "double_peak")
    throw InputError("price_day: no day_ahead_path given and no synthetic shape named '" + cfg.price_day + "'");
  if (cfg.chain_override != "none" && cfg.chain_override != "all_none" && cfg.chain_override != "all_up" &&
      cfg.chain_override != "all_down")
    throw InputError("chain_override: expected none, all_none, all_up or all_down");
  if (cfg.n_scenarios < 1) throw InputError("n_scenarios must be >= 1");
  bidding::validate(cfg.risk);
  if (!(cfg.fee_eur_mwh >= 0.0)) throw InputError("fee_eur_mwh must be >= 0");
  if (cfg.modes.empty()) throw InputError("modes: at least one mode is required");
  if (!(cfg.calibration.trim_quantile >= 0.0 && cfg.calibration.trim_quantile <= 0.1))
    throw InputError("trim_quantile must lie in [0, 0.1]");
  if (cfg.calibration.tod_blocks < 1 || kQhPerDay % cfg.calibration.tod_blocks != 0)
    throw InputError("tod_blocks must divide 96");
  if (!(cfg.solver.time_limit_s > 0.0)) throw InputError("time_limit_s must be > 0");
  if (!(cfg.solver.rel_gap >= 0.0)) throw InputError("rel_gap must be >= 0");
  if (cfg.solver.max_nodes < 1) throw InputError("max_nodes must be >= 1");
}

void set(RunConfig& cfg, std::string_view key, std::string_view value, const std::filesystem::path& base_dir) {
  for (const auto& k : table())
    if (k.name == key) {
      k.set(cfg, trim(value), base_dir);
      return;
    }
  throw InputError("unknown configuration key '" + std::string(key) + "'");
}

RunConfig parse(std::string_view text, const std::filesystem::path& base_dir, const std::string& source) {
  RunConfig cfg;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = (source.empty() ? "config" : source) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw InputError(where + ": expected key = value");
    try {
      set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path(), path.string());
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : table())
    if (k.name != "output_dir") out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

std::string hash(const RunConfig& cfg) {
  Fnv1a h;
  h.update(to_text(cfg));
  return h.hex();
}

std::vector<std::string> keys() {
  std::vector<std::string> out;
  for (const auto& k : table()) out.push_back(k.name);
  return out;
}

std::uint64_t fleet_seed(const RunConfig& cfg) { return substream_seed(cfg.seed, 1); }
std::uint64_t scenario_seed(const RunConfig& cfg) { return substream_seed(cfg.seed, 2); }

}  // namespace mfrr::config
