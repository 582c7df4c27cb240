#include "mfrr/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mfrr/common.hpp"
#include "mfrr/csv.hpp"

namespace mfrr::pipeline {
namespace {

std::string file_hash(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  Fnv1a h;
  h.update(ss.str());
  return h.hex();
}

}  // namespace

void apply_environment(config::RunConfig& cfg) {
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) cfg.output_dir = dir;
}

std::vector<fleet::EvSession> make_sessions(const config::RunConfig& cfg) {
  if (!cfg.sessions_path.empty()) {
    auto sessions = fleet::read_sessions_csv(cfg.sessions_path);
    if (auto rep = fleet::validate_sessions(sessions, cfg.fleet.horizon_qh); !rep.ok())
      throw InputError(cfg.sessions_path.string() + ": " + std::to_string(rep.total()) + " invalid sessions");
    return sessions;
  }
  fleet::FleetSpec spec = cfg.fleet;
  spec.rng_seed = config::fleet_seed(cfg);
  return fleet::sample_fleet(spec);
}

market::Calibration make_calibration(const config::RunConfig& cfg) {
  if (cfg.history_path.empty()) return market::bundled_defaults();
  const auto history = market::read_history_csv(cfg.history_path);
  return market::calibrate(history, cfg.calibration);
}

market::StateChainParams sampling_chain(const config::RunConfig& cfg, const market::Calibration& cal) {
  using market::RegulationState;
  if (cfg.chain_override == "all_none") return market::StateChainParams::absorbing(RegulationState::None);
  if (cfg.chain_override == "all_up") return market::StateChainParams::absorbing(RegulationState::Up);
  if (cfg.chain_override == "all_down") return market::StateChainParams::absorbing(RegulationState::Down);
  return cal.chain;
}

market::DayAheadPrices make_day_ahead(const config::RunConfig& cfg) {
  if (!cfg.day_ahead_path.empty()) return market::read_day_ahead_csv(cfg.day_ahead_path, cfg.fleet.horizon_qh);
  return market::synthetic_day_ahead(cfg.price_day, cfg.fleet.horizon_qh);
}

std::vector<market::MarketScenario> make_scenarios(const config::RunConfig& cfg, const market::Calibration& cal,
                                                   const market::DayAheadPrices& da) {
  const int start_qh = static_cast<int>(std::lround(cfg.fleet.horizon_start_h * 4.0)) % kQhPerDay;
  return market::sample_scenarios(sampling_chain(cfg, cal), cal.premia, da, cfg.n_scenarios,
                                  config::scenario_seed(cfg), start_qh);
}

bidding::BidSolution solve(const config::RunConfig& cfg, bidding::Mode mode, const vb::VirtualBattery& vb,
                           std::span<const market::MarketScenario> scenarios, const market::DayAheadPrices& da,
                           const bidding::BidSolution* start) {
  if (mode == bidding::Mode::Independent)
    return bidding::solve_independent(vb, scenarios, da, cfg.risk, cfg.fee_eur_mwh, cfg.solver);
  if (start) return bidding::solve_cooptimized(vb, scenarios, da, cfg.risk, cfg.fee_eur_mwh, cfg.solver, *start);
  return bidding::solve_cooptimized(vb, scenarios, da, cfg.risk, cfg.fee_eur_mwh, cfg.solver);
}

Result run_pipeline(const config::RunConfig& cfg) {
  Result r;
  const auto& dir = cfg.output_dir;
  std::string stage = "config";
  auto emit = [&](const std::string& name, const std::string& content) {
    csv::write_file(dir / name, content);
    r.artifacts.push_back(name);
  };
  try {
    config::validate(cfg);
    std::filesystem::create_directories(dir);
    emit("config.txt", config::to_text(cfg));

    stage = "fleet";
    const auto sessions = make_sessions(cfg);
    emit("sessions.csv", fleet::sessions_to_csv(sessions));

    stage = "envelopes";
    const auto vb = vb::build_envelopes(sessions, cfg.fleet.horizon_qh);
    emit("envelopes.csv", vb::to_csv(vb));

    stage = "scenarios";
    const auto da = make_day_ahead(cfg);
    emit("day_ahead.csv", market::day_ahead_to_csv(da));
    const auto cal = make_calibration(cfg);
    emit("calibration.json", market::calibration_to_json(cal));
    const auto scenarios = make_scenarios(cfg, cal, da);
    emit("scenarios.csv", market::scenarios_to_csv(scenarios));

    std::vector<bidding::BidSolution> solutions;
    std::vector<kpi::KpiPanel> panels;
    const bidding::BidSolution* independent = nullptr;
    solutions.reserve(cfg.modes.size());
    for (auto mode : cfg.modes) {
      const std::string name(bidding::to_string(mode));
      stage = "solve[" + name + "]";
      solutions.push_back(solve(cfg, mode, vb, scenarios, da, independent));
      if (mode == bidding::Mode::Independent) independent = &solutions.back();
      emit("solution_" + name + ".json", bidding::solution_to_json(solutions.back()));

      stage = "evaluate[" + name + "]";
      panels.push_back(kpi::evaluate(solutions.back(), scenarios, da, cfg.risk, cfg.fee_eur_mwh, da.source));
      emit("kpi_" + name + ".json", kpi::to_json(panels.back()));
      emit("trace_" + name + ".csv", kpi::trace_csv(solutions.back(), vb, scenarios, da));
    }
    emit("kpi.csv", kpi::to_csv(panels));

    if (panels.size() == 2) {
      stage = "compare";
      emit("compare.json", kpi::to_json(kpi::compare(panels[0], panels[1])));
    }
  } catch (const std::exception& e) {
    r.ok = false;
    r.failed_stage = stage;
    r.error = e.what();
  }
  try {
    std::filesystem::create_directories(dir);
    csv::write_file(dir / "MANIFEST", manifest_json(cfg, r));
  } catch (const std::exception& e) {
    if (r.ok) {
      r.ok = false;
      r.failed_stage = "manifest";
      r.error = e.what();
    }
  }
  return r;
}

std::string manifest_json(const config::RunConfig& cfg, const Result& r) {
  nlohmann::ordered_json j;
  j["status"] = r.ok ? "ok" : "failed";
  if (!r.ok) {
    j["failed_stage"] = r.failed_stage;
    j["error"] = r.error;
  }
  j["config_hash"] = config::hash(cfg);
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& a : r.artifacts) files.push_back({{"file", a}, {"fnv1a", file_hash(cfg.output_dir / a)}});
  j["artifacts"] = std::move(files);
  return j.dump(1) + "\n";
}

}  // namespace mfrr::pipeline
