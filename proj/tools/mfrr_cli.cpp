#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mfrr/bidding.hpp"
#include "mfrr/common.hpp"
#include "mfrr/config.hpp"
#include "mfrr/csv.hpp"
#include "mfrr/fleet.hpp"
#include "mfrr/kpi.hpp"
#include "mfrr/market.hpp"
#include "mfrr/pipeline.hpp"
#include "mfrr/virtual_battery.hpp"

namespace fs = std::filesystem;
using namespace mfrr;

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta, alpha, fee;
  std::optional<std::string> mode;
  std::optional<int> n_scenarios;
  std::optional<std::string> output;
  bool verbose = false;

  // Config file, then $MFRR_OUTPUT_DIR, then flags.
  config::RunConfig resolve() const {
    config::RunConfig cfg = config_path.empty() ? config::RunConfig{} : config::load(config_path);
    pipeline::apply_environment(cfg);
    if (seed) cfg.seed = *seed;
    if (beta) cfg.risk.beta = *beta;
    if (alpha) cfg.risk.alpha = *alpha;
    if (fee) cfg.fee_eur_mwh = *fee;
    if (mode) config::set(cfg, "modes", *mode);
    if (n_scenarios) cfg.n_scenarios = *n_scenarios;
    if (output) cfg.output_dir = *output;
    cfg.solver.verbose = verbose;
    config::validate(cfg);
    return cfg;
  }
};

fs::path out_path(const config::RunConfig& cfg, const std::string& explicit_path, const std::string& name) {
  return explicit_path.empty() ? cfg.output_dir / name : fs::path(explicit_path);
}

void write(const fs::path& p, const std::string& content) {
  csv::write_file(p, content);
  std::fprintf(stderr, "wrote %s\n", p.string().c_str());
}

market::DayAheadPrices day_ahead_for(const config::RunConfig& cfg, const std::string& path) {
  if (!path.empty()) return market::read_day_ahead_csv(path, cfg.fleet.horizon_qh);
  return pipeline::make_day_ahead(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV fleet day-ahead and mFRR energy-activation bidding"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides ov;
  app.add_option("-c,--config", ov.config_path, "key = value run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", ov.seed, "master RNG seed");
  app.add_option("--beta", ov.beta, "CVaR weight in [0,1]");
  app.add_option("--alpha", ov.alpha, "CVaR level in [0,1]");
  app.add_option("--fee", ov.fee, "imbalance fee, EUR/MWh");
  app.add_option("--mode", ov.mode, "independent, cooptimized or both");
  app.add_option("--n,--n-scenarios", ov.n_scenarios, "number of market scenarios");
  app.add_option("-o,--output", ov.output, "output directory (overrides $MFRR_OUTPUT_DIR)");
  app.add_flag("-v,--verbose", ov.verbose, "solver progress on stderr");

  std::string out_file;
  auto* fleet_cmd = app.add_subcommand("fleet-sample", "sample EV sessions -> sessions.csv");
  fleet_cmd->add_option("--out", out_file, "output file");

  std::string sessions_in;
  auto* env_cmd = app.add_subcommand("envelopes", "sessions.csv -> envelopes.csv");
  env_cmd->add_option("sessions", sessions_in, "sessions CSV")->required()->check(CLI::ExistingFile);
  env_cmd->add_option("--out", out_file, "output file");

  std::string history_in;
  auto* cal_cmd = app.add_subcommand("scenarios-calibrate", "price history -> calibration.json");
  cal_cmd->add_option("history", history_in, "history CSV (timestamp_iso8601, lambda_da, lambda_up, lambda_dn)")
      ->check(CLI::ExistingFile);
  cal_cmd->add_option("--out", out_file, "output file");

  std::string calibration_in, day_ahead_in, scenarios_out;
  auto* sample_cmd = app.add_subcommand("scenarios-sample", "calibration -> scenarios.csv and day_ahead.csv");
  sample_cmd->add_option("--calibration", calibration_in, "calibration JSON (default: config source)")
      ->check(CLI::ExistingFile);
  sample_cmd->add_option("--day-ahead", day_ahead_in, "day-ahead price CSV (default: config source)")
      ->check(CLI::ExistingFile);
  sample_cmd->add_option("--out", scenarios_out, "scenario file");

  std::string envelopes_in, scenarios_in, start_in;
  auto* solve_cmd = app.add_subcommand("solve", "envelopes + scenarios -> solution_<mode>.json");
  solve_cmd->add_option("--envelopes", envelopes_in, "envelopes CSV")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--scenarios", scenarios_in, "scenario CSV")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--day-ahead", day_ahead_in, "day-ahead price CSV (default: config source)")
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--start", start_in, "solution JSON seeding the co-optimised search")
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--out", out_file, "output file");

  std::string solution_in;
  auto* eval_cmd = app.add_subcommand("evaluate", "solution + scenarios -> kpi_<mode>.json, trace_<mode>.csv");
  eval_cmd->add_option("--solution", solution_in, "solution JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--scenarios", scenarios_in, "scenario CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--envelopes", envelopes_in, "envelopes CSV (enables the trace)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--day-ahead", day_ahead_in, "day-ahead price CSV (default: config source)")
      ->check(CLI::ExistingFile);

  std::string kpi_a, kpi_b;
  auto* cmp_cmd = app.add_subcommand("compare", "two KPI panels -> compare.json");
  cmp_cmd->add_option("a", kpi_a, "baseline KPI JSON")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("b", kpi_b, "candidate KPI JSON")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--out", out_file, "output file");

  auto* run_cmd = app.add_subcommand("run", "full pipeline into the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const config::RunConfig cfg = ov.resolve();

    if (*fleet_cmd) {
      write(out_path(cfg, out_file, "sessions.csv"), fleet::sessions_to_csv(pipeline::make_sessions(cfg)));
    } else if (*env_cmd) {
      const auto sessions = fleet::read_sessions_csv(sessions_in);
      write(out_path(cfg, out_file, "envelopes.csv"), vb::to_csv(vb::build_envelopes(sessions, cfg.fleet.horizon_qh)));
    } else if (*cal_cmd) {
      config::RunConfig c = cfg;
      if (!history_in.empty()) c.history_path = history_in;
      const auto cal = pipeline::make_calibration(c);
      const auto& rep = cal.report;
      if (!c.history_path.empty())
        std::fprintf(stderr, "calibrated on %zu records (%zu transitions, %zu empty cells, %zu both-direction QHs)\n",
                     rep.records, rep.transitions, rep.empty_cells, rep.both_directions);
      write(out_path(c, out_file, "calibration.json"), market::calibration_to_json(cal));
    } else if (*sample_cmd) {
      const auto cal = calibration_in.empty() ? pipeline::make_calibration(cfg)
                                              : market::calibration_from_json(slurp(calibration_in));
      const auto da = day_ahead_for(cfg, day_ahead_in);
      const auto scenarios = pipeline::make_scenarios(cfg, cal, da);
      write(out_path(cfg, scenarios_out, "scenarios.csv"), market::scenarios_to_csv(scenarios));
      if (day_ahead_in.empty()) write(cfg.output_dir / "day_ahead.csv", market::day_ahead_to_csv(da));
    } else if (*solve_cmd) {
      if (cfg.modes.size() != 1) throw InputError("solve: pass exactly one --mode");
      const auto mode = cfg.modes.front();
      const auto vbat = vb::read_csv(envelopes_in);
      const auto scenarios = market::read_scenarios_csv(scenarios_in);
      const auto da = day_ahead_for(cfg, day_ahead_in);
      std::optional<bidding::BidSolution> start;
      if (!start_in.empty()) start = bidding::solution_from_json(slurp(start_in));
      const auto sol = pipeline::solve(cfg, mode, vbat, scenarios, da, start ? &*start : nullptr);
      write(out_path(cfg, out_file, "solution_" + std::string(bidding::to_string(mode)) + ".json"),
            bidding::solution_to_json(sol));
    } else if (*eval_cmd) {
      const auto sol = bidding::solution_from_json(slurp(solution_in));
      const auto scenarios = market::read_scenarios_csv(scenarios_in);
      const auto da = day_ahead_for(cfg, day_ahead_in);
      const std::string name(bidding::to_string(sol.mode));
      const auto panel = kpi::evaluate(sol, scenarios, da, sol.risk, sol.fee_eur_mwh, da.source);
      write(cfg.output_dir / ("kpi_" + name + ".json"), kpi::to_json(panel));
      if (!envelopes_in.empty())
        write(cfg.output_dir / ("trace_" + name + ".csv"),
              kpi::trace_csv(sol, vb::read_csv(envelopes_in), scenarios, da));
      std::printf("%s", kpi::to_csv(std::span(&panel, 1)).c_str());
    } else if (*cmp_cmd) {
      const auto a = kpi::panel_from_json(slurp(kpi_a));
      const auto b = kpi::panel_from_json(slurp(kpi_b));
      const std::string report = kpi::to_json(kpi::compare(a, b));
      write(out_path(cfg, out_file, "compare.json"), report);
      std::printf("%s", report.c_str());
    } else if (*run_cmd) {
      const auto r = pipeline::run_pipeline(cfg);
      if (!r.ok) {
        std::fprintf(stderr, "error in stage %s: %s\n", r.failed_stage.c_str(), r.error.c_str());
        return kExitDomain;
      }
      std::fprintf(stderr, "wrote %zu artifacts to %s\n", r.artifacts.size(), cfg.output_dir.string().c_str());
    }
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDomain;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitDomain;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDomain;
  }
  return 0;
}
