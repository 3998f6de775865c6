#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nfpe/run.hpp"

using namespace nfpe;
namespace fs = std::filesystem;

namespace {
const char* kMinimal = R"(
scenario = "heat"   # comment after a value
[grid]
n = 16
L = 10.0
[evolution]
T = 0.05
n_steps = 5
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nfpe_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

RunOptions quiet(const fs::path& out) {
  static std::ostringstream sink;
  RunOptions o;
  o.out_dir = out.string();
  o.log = &sink;
  return o;
}
}  // namespace

TEST(Parser, SectionsListsQuotesAndComments) {
  const auto kv = parse_key_values("a = 1\n[s]\nb = \"x # y\"\nc = [1, 2.5, 3] # tail\n");
  EXPECT_EQ(kv.at("a").text, "1");
  EXPECT_EQ(kv.at("s.b").text, "x # y");
  EXPECT_TRUE(kv.at("s.b").quoted);
  ASSERT_TRUE(kv.at("s.c").is_list);
  EXPECT_EQ(kv.at("s.c").items.size(), 3u);
  EXPECT_EQ(kv.at("s.c").line, 4);
}

TEST(Parser, MalformedInputNamesTheLine) {
  auto message = [](const char* text) {
    try {
      parse_key_values(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("a = 1\nb\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("[g\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("a = 1\na = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(message("a = \"open\n").find("unterminated"), std::string::npos);
}

TEST(RunConfigParse, MinimalScenarioConfig) {
  const auto c = parse_run_config(kMinimal);
  EXPECT_EQ(c.scenario, "heat");
  EXPECT_EQ(*c.grid.dim, 2);
  EXPECT_EQ(*c.grid.n, 16u);
  EXPECT_DOUBLE_EQ(c.make_evolution().lambda(), 0.01);
  EXPECT_FALSE(c.evolution.eps.has_value());
}

TEST(RunConfigParse, UnknownKeyReportsLineAndName) {
  try {
    parse_run_config("scenario = \"heat\"\n[grid]\nn = 16\nL = 1\nnn = 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("grid.nn"), std::string::npos);
  }
}

TEST(RunConfigParse, MissingRequiredKeyIsNamed) {
  try {
    parse_run_config("scenario = \"heat\"\n[grid]\nL = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("grid.n"), std::string::npos);
  }
  EXPECT_THROW(parse_run_config("[grid]\nn = 16\nL = 1\n"), ConfigError);  // no dim without a scenario
}

TEST(RunConfigParse, ValuesAreValidated) {
  EXPECT_THROW(parse_run_config("scenario = \"heat\"\n[grid]\nn = 12\nL = 1\n"), ConfigError);
  EXPECT_THROW(parse_run_config("scenario = \"heat\"\n[grid]\nn = 16\nL = abc\n"), ConfigError);
  EXPECT_THROW(parse_run_config("scenario = \"nope\"\n[grid]\nn = 16\nL = 1\n"), ConfigError);
  EXPECT_THROW(parse_run_config("scenario = \"heat\"\n[grid]\nn = 16\nL = 1\n[probes]\neps_list = [0.01, 0.1]\n"),
               ConfigError);
  EXPECT_THROW(parse_run_config("scenario = \"heat\"\n[grid]\nn = 16\nL = 1\n[particles]\nmode = \"x\"\n"),
               ConfigError);
}

TEST(RunConfigParse, EpsListEnablesProbes) {
  const auto c = parse_run_config("scenario = \"heat\"\n[grid]\nn = 16\nL = 1\n[probes]\neps_list = [0.1, 0.01]\n");
  EXPECT_TRUE(c.probes.enabled);
  EXPECT_EQ(c.probes.eps_list.size(), 2u);
}

TEST(RunConfigParse, ResolvedTextRoundTrips) {
  auto c = parse_run_config(kMinimal);
  c.evolution.eps = 0.123456789012345678;
  c.probes.enabled = true;
  const std::string text = c.resolved_text();
  const auto back = parse_run_config(text);
  EXPECT_EQ(back.resolved_text(), text);
  EXPECT_EQ(*back.evolution.eps, *c.evolution.eps);
}

TEST(RunConfigParse, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(NFPE_CONFIG_DIR)) {
    if (entry.path().extension() != ".conf") continue;
    EXPECT_NO_THROW(load_run_config(entry.path().string())) << entry.path();
  }
}

TEST(RunConfigParse, MissingFileIsMissingInput) {
  EXPECT_THROW(load_run_config("/nonexistent/dir/x.conf"), MissingInput);
}

TEST(Guarded, MapsErrorsToExitCodes) {
  std::ostringstream err;
  EXPECT_EQ(guarded([]() -> int { throw MissingInput("x"); }, err), kExitMissingInput);
  EXPECT_EQ(guarded([]() -> int { throw ConfigError("x"); }, err), kExitConfig);
  EXPECT_EQ(guarded([]() -> int { throw SnapshotError("x"); }, err), kExitMissingInput);
  EXPECT_EQ(guarded([]() -> int { throw NumericalError("x"); }, err), kExitSolver);
  EXPECT_EQ(guarded([] { return 0; }, err), kExitOk);
}

TEST(Commands, SolveWritesMonitorsWithConservedMass) {
  const auto out = scratch("solve");
  ASSERT_EQ(cmd_solve(parse_run_config(kMinimal), quiet(out)), kExitOk);
  const auto rows = read_csv(out / "monitors.csv");
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0][1], "mass");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_NEAR(std::stod(rows[i][1]), 1.0, 1e-9);
  EXPECT_TRUE(fs::exists(out / "config.resolved"));
  EXPECT_TRUE(fs::exists(out / "validation.txt"));
  const auto tr = io::read_snapshot_series(out / "snapshots");
  EXPECT_EQ(tr.snapshots.size(), 6u);
  EXPECT_DOUBLE_EQ(tr.times.back(), 0.05);
  const auto again = load_run_config((out / "config.resolved").string());
  EXPECT_EQ(*again.grid.n, 16u);
  EXPECT_EQ(again.out_dir, out.string());
}

TEST(Commands, HypothesisFailureGivesExitTwo) {
  const auto out = scratch("bs");
  const auto c = parse_run_config("scenario = \"biot_savart_lamb_oseen\"\n[grid]\nn = 16\nL = 10\n[evolution]\nT = 0.02\nn_steps = 2\n");
  EXPECT_EQ(cmd_solve(c, quiet(out)), kExitHypothesis);
  EXPECT_EQ(cmd_kernels(c, quiet(scratch("bs_kernels"))), kExitHypothesis);
}

TEST(Commands, SolverFailureGivesExitOne) {
  const auto out = scratch("fail");
  const auto c = parse_run_config(
      "scenario = \"porous_medium\"\n[grid]\nn = 32\nL = 10\n[nonlinearity]\ndrift = \"none\"\nmobility = \"unit\"\n"
      "[initial]\nkind = \"gaussian\"\nsigma = 0.5\n[evolution]\nT = 0.4\nn_steps = 4\neps = 0.01\nmax_iter = 1\n");
  EXPECT_EQ(cmd_solve(c, quiet(out)), kExitSolver);
  EXPECT_TRUE(fs::exists(out / "summary.txt"));
}

TEST(Commands, TabulatedKernelRoundTripsThroughKernelsCommand) {
  const auto out = scratch("tab");
  const auto c = parse_run_config("scenario = \"biot_savart_lamb_oseen\"\n[grid]\nn = 16\nL = 10\n");
  cmd_kernels(c, quiet(out));
  const Field k = load_snapshot((out / "kernel.nfpe").string());
  auto tab = parse_run_config("scenario = \"biot_savart_lamb_oseen\"\n[grid]\nn = 16\nL = 10\n[kernel]\nkind = \"tabulated\"\npath = \"" +
                              (out / "kernel.nfpe").string() + "\"\n");
  const Grid g = tab.make_grid();
  const Field k2 = sample_kernel(tab.make_kernel(g), g);
  for (std::size_t i = 0; i < k.values().size(); ++i) EXPECT_EQ(k.values()[i], k2.values()[i]);
  auto missing = tab;
  missing.kernel.path = (out / "absent.nfpe").string();
  EXPECT_THROW(missing.make_kernel(g), MissingInput);
}

TEST(Commands, ParticlesSelfConsistentWritesKde) {
  const auto out = scratch("particles");
  const auto c = parse_run_config(
      "scenario = \"heat\"\n[grid]\nn = 16\nL = 10\n[particles]\nN = 500\ndt = 0.05\nT = 0.1\n"
      "mode = \"self_consistent\"\nbandwidth = 1.5\nwrite_positions = true\n");
  EXPECT_EQ(cmd_particles(c, quiet(out)), kExitOk);
  const auto kde = io::read_snapshot_series(out / "kde");
  EXPECT_EQ(kde.snapshots.size(), 2u);
  EXPECT_NEAR(kde.snapshots.back().integral(), 1.0, 1e-12);
  EXPECT_EQ(read_csv(out / "particles.csv").size(), 1u + 2u * 500u);
}

TEST(Commands, ValidateNegativeControlFails) {
  std::ostringstream log;
  RunOptions o;
  o.log = &log;
  OracleOptions bug;
  bug.inject_multiplier_bug = true;
  EXPECT_EQ(cmd_validate(o, bug), kExitSolver);
  EXPECT_NE(log.str().find("FAIL"), std::string::npos);
}
