// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "fblab/cli.hpp"
#include "fblab/errors.hpp"

using namespace fblab;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> base_keys(const std::string& experiment) {
  return {{"experiment", "\"" + experiment + "\""},
          {"dim", "2"},
          {"half_width", "1.0"},
          {"nodes_per_axis", "32"},
          {"theta_list", "[0.4, 0.2]"},
          {"radii_list", "[0.5, 0.6]"},
          {"centers", "[[0.0, 0.0]]"},
          {"cutoff_eps", "0.1"},
          {"epsilon_hat", "0.05"},
          {"boundary_data", "\"half-plane\""},
          {"bend", "0.0"},
          {"near_band", "0.1"},
          {"window_radius", "0.25"},
          {"field_path", "\"\""},
          {"delta_schedule", "\"auto\""},
          {"initial_step", "1.0"},
          {"backtrack", "0.5"},
          {"max_iterations", "3000"},
          {"tolerance", "1e-6"},
          {"harmonic_iterations", "200"},
          {"coarse_levels", "2"}};
}

std::string render(const std::map<std::string, std::string>& keys) {
  std::ostringstream s;
  s << "# test config\n";
  for (const auto& [k, v] : keys) s << k << " = " << v << "\n";
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fblab_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage{"fblab"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, ParsesAllKeys) {
  auto keys = base_keys("theta-sweep");
  keys["delta_schedule"] = "[\n  0.1,\n  0.05,  # trailing comment\n]";
  const ExperimentConfig c = parse_config(render(keys));
  EXPECT_EQ(c.experiment, "theta-sweep");
  EXPECT_EQ(c.nodes_per_axis, 32);
  EXPECT_EQ(c.theta_list, (std::vector<double>{0.4, 0.2}));
  ASSERT_EQ(c.centers.size(), 1u);
  ASSERT_TRUE(c.delta_schedule.has_value());
  EXPECT_EQ(*c.delta_schedule, (std::vector<double>{0.1, 0.05}));
  EXPECT_FALSE(parse_config(render(base_keys("theta-sweep"))).delta_schedule.has_value());
}

TEST(Config, Errors) {
  auto keys = base_keys("theta-sweep");
  keys["theta_list"] = "[]";
  EXPECT_THROW(parse_config(render(keys)), ConfigError);
  keys = base_keys("theta-sweep");
  keys.erase("tolerance");
  EXPECT_THROW(parse_config(render(keys)), ConfigError);
  keys = base_keys("theta-sweep");
  keys["extra"] = "1";
  EXPECT_THROW(parse_config(render(keys)), ConfigError);
  EXPECT_THROW(parse_config(render(base_keys("theta-sweep")) + "dim = 2\n"), ConfigError);
  keys = base_keys("nonsense");
  EXPECT_THROW(parse_config(render(keys)), ConfigError);
  keys = base_keys("theta-sweep");
  keys["radii_list"] = "[0.5, 0.4]";
  EXPECT_THROW(parse_config(render(keys)), ConfigError);
  keys = base_keys("theta-sweep");
  keys["dim"] = "\"two\"";
  EXPECT_THROW(parse_config(render(keys)), ConfigError);
}

TEST(Config, Preconditions) {
  auto keys = base_keys("theta-sweep");
  keys["radii_list"] = "[0.1]";  // below 8h = 0.5
  EXPECT_THROW(validate_preconditions(parse_config(render(keys))), PreconditionError);
  keys = base_keys("theta-sweep");
  keys["centers"] = "[[0.0, 0.7]]";
  EXPECT_THROW(validate_preconditions(parse_config(render(keys))), PreconditionError);
  keys = base_keys("monotonicity-audit");
  keys["theta_list"] = "[2.0]";
  EXPECT_THROW(validate_preconditions(parse_config(render(keys))), PreconditionError);
  keys = base_keys("theta-sweep");
  keys["delta_schedule"] = "[0.5]";
  EXPECT_THROW(validate_preconditions(parse_config(render(keys))), PreconditionError);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("exit");
  auto keys = base_keys("exact-validate");
  std::ofstream(dir / "ok.toml") << render(keys);
  keys["theta_list"] = "[]";
  std::ofstream(dir / "empty.toml") << render(keys);
  keys = base_keys("exact-validate");
  keys["radii_list"] = "[0.2]";
  std::ofstream(dir / "small.toml") << render(keys);
  EXPECT_EQ(run({"exact-validate", "--config", (dir / "ok.toml").string(), "--out", (dir / "out").string()}), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "out" / "exact_density.csv"));
  EXPECT_EQ(run({"exact-validate", "--config", (dir / "empty.toml").string(), "--out", (dir / "o2").string()}), kExitConfig);
  EXPECT_EQ(run({"exact-validate", "--config", (dir / "small.toml").string(), "--out", (dir / "o3").string()}), kExitPrecondition);
  EXPECT_EQ(run({"theta-sweep", "--config", (dir / "ok.toml").string(), "--out", (dir / "o4").string()}), kExitConfig);
  EXPECT_EQ(run({"exact-validate", "--config", (dir / "missing.toml").string(), "--out", (dir / "o5").string()}), kExitConfig);
  EXPECT_EQ(run({"exact-validate"}), kExitConfig);
  EXPECT_EQ(run({"--help"}), kExitOk);
}

TEST(Cli, ExperimentsAreDeterministic) {
  const fs::path dir = scratch("determinism");
  for (const std::string e : {"exact-validate", "monotonicity-audit", "theta-sweep", "curvature-sweep"}) {
    auto keys = base_keys(e);
    if (e == "curvature-sweep") {
      keys["boundary_data"] = "\"bent\"";
      keys["bend"] = "0.25";
    }
    const ExperimentConfig c = parse_config(render(keys));
    std::ostringstream log;
    const RunSummary a = run_experiment(c, dir / (e + "_a"), log);
    run_experiment(c, dir / (e + "_b"), log);
    EXPECT_EQ(a.warnings, 0) << e;
    for (const fs::path& f : a.files) {
      if (f.extension() == ".svg") continue;
      EXPECT_EQ(slurp(f), slurp(dir / (e + "_b") / f.filename())) << f;
    }
  }
}

TEST(Cli, RowsCarryResolutionAndTolerance) {
  const fs::path dir = scratch("rows");
  const ExperimentConfig c = parse_config(render(base_keys("exact-validate")));
  std::ostringstream log;
  for (const fs::path& f : run_experiment(c, dir, log).files) {
    if (f.extension() != ".csv") continue;
    std::ifstream in(f);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("N,h,tolerance,", 0), 0u) << f;
    std::string row;
    std::getline(in, row);
    EXPECT_EQ(row.rfind("32,0.0625,1e-06,", 0), 0u) << f;
  }
}

TEST(Cli, AuditReloadsSavedFields) {
  const fs::path dir = scratch("reload");
  auto keys = base_keys("monotonicity-audit");
  std::ostringstream log;
  run_experiment(parse_config(render(keys)), dir / "solve", log);
  keys["field_path"] = "\"" + (dir / "solve").string() + "\"";
  run_experiment(parse_config(render(keys)), dir / "load", log);
  EXPECT_EQ(slurp(dir / "solve" / "profiles.csv"), slurp(dir / "load" / "profiles.csv"));
}
