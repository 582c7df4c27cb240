#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mfrr/common.hpp"
#include "mfrr/config.hpp"
#include "mfrr/csv.hpp"
#include "mfrr/kpi.hpp"
#include "mfrr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mfrr;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mfrr_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

config::RunConfig small(const fs::path& out) {
  config::RunConfig cfg;
  cfg.fleet.n_vehicles = 100;
  cfg.n_scenarios = 30;
  cfg.seed = 77;
  cfg.solver.rel_gap = 1e-3;
  cfg.output_dir = out;
  return cfg;
}

const char* kSmallCfg =
    "# small run\n"
    "n_vehicles = 100\n"
    "n_scenarios = 30\n"
    "seed = 77\n"
    "rel_gap = 1e-3\n";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MFRR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Config, ParsesKeysAndComments) {
  const auto cfg = config::parse(
      "# comment\n"
      "n_vehicles = 250\n"
      "\n"
      "beta = 0.3   # trailing\n"
      "modes = cooptimized\n"
      "engine = interior_point\n"
      "price_day = double_peak\n");
  EXPECT_EQ(cfg.fleet.n_vehicles, 250);
  EXPECT_DOUBLE_EQ(cfg.risk.beta, 0.3);
  ASSERT_EQ(cfg.modes.size(), 1u);
  EXPECT_EQ(cfg.modes[0], bidding::Mode::Cooptimized);
  EXPECT_EQ(cfg.solver.engine, bidding::Engine::InteriorPoint);
  EXPECT_EQ(cfg.price_day, "double_peak");
}

TEST(Config, UnknownKeyNamesTheLine) {
  try {
    config::parse("seed = 1\nbogus = 2\n", {}, "run.cfg");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(config::validate(config::parse("beta = 1.5\n")), InputError);
  EXPECT_THROW(config::validate(config::parse("n_scenarios = 0\n")), InputError);
  EXPECT_THROW(config::validate(config::parse("chain_override = sideways\n")), InputError);
  EXPECT_THROW(config::validate(config::parse("trim_quantile = 0.2\n")), InputError);
  EXPECT_THROW(config::parse("seed\n"), InputError);
}

TEST(Config, RelativePathsFollowTheFile) {
  const auto dir = scratch("cfgdir");
  csv::write_file(dir / "run.cfg", "history_path = data/h.csv\noutput_dir = out\n");
  const auto cfg = config::load(dir / "run.cfg");
  EXPECT_EQ(cfg.history_path, dir / "data/h.csv");
  EXPECT_EQ(cfg.output_dir, dir / "out");
  EXPECT_THROW(config::load(dir / "missing.cfg"), InputError);
  fs::remove_all(dir);
}

TEST(Config, HashIgnoresOutputDirectory) {
  auto a = small("x");
  auto b = small("y");
  EXPECT_EQ(config::hash(a), config::hash(b));
  b.seed = 78;
  EXPECT_NE(config::hash(a), config::hash(b));
  EXPECT_NE(config::fleet_seed(a), config::scenario_seed(a));
  // Text form re-parses to the same configuration.
  EXPECT_EQ(config::hash(config::parse(config::to_text(a))), config::hash(a));
  EXPECT_FALSE(config::keys().empty());
}

TEST(Config, EnvironmentSetsOutputDirectory) {
  auto cfg = small("from_config");
  ::setenv(pipeline::kOutputDirEnv, "/tmp/from_env", 1);
  pipeline::apply_environment(cfg);
  ::unsetenv(pipeline::kOutputDirEnv);
  EXPECT_EQ(cfg.output_dir, fs::path("/tmp/from_env"));
}

TEST(Pipeline, SmallRunProducesConsistentArtifacts) {
  const auto dir = scratch("run");
  const auto r = pipeline::run_pipeline(small(dir));
  ASSERT_TRUE(r.ok) << r.failed_stage << ": " << r.error;
  for (const char* f : {"config.txt", "sessions.csv", "envelopes.csv", "day_ahead.csv", "calibration.json",
                        "scenarios.csv", "solution_independent.json", "solution_cooptimized.json",
                        "kpi_independent.json", "kpi_cooptimized.json", "trace_independent.csv",
                        "trace_cooptimized.csv", "kpi.csv", "compare.json", "MANIFEST"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto ind = kpi::panel_from_json(slurp(dir / "kpi_independent.json"));
  const auto co = kpi::panel_from_json(slurp(dir / "kpi_cooptimized.json"));
  EXPECT_GE(co.objective_eur, ind.objective_eur - 1e-6);
  const auto cmp = nlohmann::json::parse(slurp(dir / "compare.json"));
  EXPECT_TRUE(cmp.at("flags").at("objective_improves").get<bool>());
  const auto manifest = nlohmann::json::parse(slurp(dir / "MANIFEST"));
  EXPECT_EQ(manifest.at("status"), "ok");
  EXPECT_EQ(manifest.at("artifacts").size(), r.artifacts.size());
  fs::remove_all(dir);
}

TEST(Pipeline, RerunIsByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto cfg = small(a);
  cfg.modes = {bidding::Mode::Cooptimized};
  ASSERT_TRUE(pipeline::run_pipeline(cfg).ok);
  cfg.output_dir = b;
  const auto r = pipeline::run_pipeline(cfg);
  ASSERT_TRUE(r.ok);
  for (const auto& f : r.artifacts) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_EQ(slurp(a / "MANIFEST"), slurp(b / "MANIFEST"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Pipeline, NoRegulationSingleScenario) {
  const auto dir = scratch("none");
  auto cfg = small(dir);
  cfg.n_scenarios = 1;
  cfg.chain_override = "all_none";
  const auto r = pipeline::run_pipeline(cfg);
  ASSERT_TRUE(r.ok) << r.error;
  for (const char* mode : {"independent", "cooptimized"}) {
    const auto p = kpi::panel_from_json(slurp(dir / (std::string("kpi_") + mode + ".json")));
    EXPECT_EQ(p.expected.mfrr_up_mwh, 0.0);
    EXPECT_EQ(p.expected.mfrr_dn_mwh, 0.0);
    EXPECT_NEAR(p.expected.imbalance_eur, 0.0, 1e-9);
    EXPECT_NEAR(p.expected.total_eur, p.expected.da_eur, 1e-9);
    EXPECT_DOUBLE_EQ(p.cvar_eur, p.expected.total_eur);
  }
  fs::remove_all(dir);
}

TEST(Pipeline, FailureStillWritesManifest) {
  const auto dir = scratch("fail");
  auto cfg = small(dir);
  csv::write_file(dir / "short_day.csv", "lambda_da\n40\n41\n");
  cfg.day_ahead_path = dir / "short_day.csv";
  const auto r = pipeline::run_pipeline(cfg);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.failed_stage, "scenarios");
  EXPECT_FALSE(r.error.empty());
  const auto manifest = nlohmann::json::parse(slurp(dir / "MANIFEST"));
  EXPECT_EQ(manifest.at("status"), "failed");
  EXPECT_EQ(manifest.at("failed_stage"), r.failed_stage);
  EXPECT_TRUE(fs::exists(dir / "sessions.csv"));
  EXPECT_FALSE(fs::exists(dir / "kpi.csv"));
  fs::remove_all(dir);
}

TEST(Cli, ComposedStagesReproduceRun) {
  const auto dir = scratch("cli");
  csv::write_file(dir / "run.cfg", kSmallCfg);
  const std::string c = "-c " + (dir / "run.cfg").string();
  const auto full = dir / "full", step = dir / "step";
  ASSERT_EQ(run_cli(c + " -o " + full.string() + " run"), 0);

  const std::string o = c + " -o " + step.string();
  ASSERT_EQ(run_cli(o + " fleet-sample"), 0);
  ASSERT_EQ(run_cli(o + " envelopes " + (step / "sessions.csv").string()), 0);
  ASSERT_EQ(run_cli(o + " scenarios-sample"), 0);
  const std::string inputs = " --envelopes " + (step / "envelopes.csv").string() + " --scenarios " +
                             (step / "scenarios.csv").string() + " --day-ahead " +
                             (step / "day_ahead.csv").string();
  ASSERT_EQ(run_cli(o + " --mode independent solve" + inputs), 0);
  ASSERT_EQ(run_cli(o + " --mode cooptimized solve" + inputs + " --start " +
                    (step / "solution_independent.json").string()),
            0);
  for (const char* m : {"independent", "cooptimized"})
    ASSERT_EQ(run_cli(o + " evaluate --solution " + (step / (std::string("solution_") + m + ".json")).string() +
                      inputs.substr(inputs.find(" --scenarios"))),
              0);
  ASSERT_EQ(run_cli(o + " compare " + (step / "kpi_independent.json").string() + " " +
                    (step / "kpi_cooptimized.json").string()),
            0);

  for (const char* f : {"sessions.csv", "envelopes.csv", "scenarios.csv", "day_ahead.csv",
                        "solution_independent.json", "solution_cooptimized.json", "kpi_independent.json",
                        "kpi_cooptimized.json", "compare.json"})
    EXPECT_EQ(slurp(full / f), slurp(step / f)) << f;
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli_codes");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("--no-such-flag run"), 2);
  EXPECT_EQ(run_cli("envelopes " + (dir / "missing.csv").string()), 2);
  EXPECT_EQ(run_cli("-o " + dir.string() + " --beta 2 run"), 1);
  csv::write_file(dir / "bad.csv", "vehicle_id,arrival_qh\n0,1\n");
  EXPECT_EQ(run_cli("-o " + dir.string() + " envelopes " + (dir / "bad.csv").string()), 1);
  fs::remove_all(dir);
}
