// Scenario runner: parses a config, runs the requested experiment, writes the
// report and trajectory files.  Exit code 0 means every mandatory check
// passed, 1 a failed check or a solve that died mid-run, 2 a config problem.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fastdiff/io.hpp"
#include "fastdiff/scenario.hpp"

namespace {

using namespace fastdiff;

ConfigMap map_with_overrides(ConfigMap base, const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) apply_override(base, ov);
  return base;
}

int cmd_params(const std::vector<std::string>& overrides) {
  const ScenarioConfig cfg = config_from_map(map_with_overrides({}, overrides));
  std::cout << params_json(cfg.params()).dump(2) << "\n";
  return 0;
}

int run_and_write(const ConfigMap& map, const std::string& out_dir) {
  const ScenarioConfig cfg = config_from_map(map);
  const ScenarioResult res = run_scenario(cfg);
  write_scenario_outputs(res, out_dir, utc_timestamp());
  std::cout << format_report_text(res.report);
  std::cout << "outputs: " << out_dir << "\n";
  return res.report.all_passed() ? 0 : 1;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::vector<std::string>& overrides) {
  return run_and_write(map_with_overrides(parse_ini_file(config_path), overrides), out_dir);
}

int cmd_selftest(const std::string& out_dir, const std::vector<std::string>& overrides) {
  ConfigMap map;
  map["scenario.name"] = to_string(Scenario::BarenblattSelftest);
  return run_and_write(map_with_overrides(std::move(map), overrides), out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radial fast-diffusion laboratory"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  std::string config_path;
  std::vector<std::string> overrides;

  auto* params_cmd = app.add_subcommand("params", "print derived constants as JSON");
  auto* run_cmd = app.add_subcommand("run", "run a scenario described by a config file");
  run_cmd->add_option("config", config_path, "config file path")->required();
  auto* selftest_cmd = app.add_subcommand("selftest", "run the closed-form self checks");

  for (CLI::App* sub : {params_cmd, run_cmd, selftest_cmd}) {
    sub->add_option("--out", out_dir, "output directory (default: out)");
    sub->add_option("--override", overrides, "key=value config override (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (params_cmd->parsed()) return cmd_params(overrides);
    if (run_cmd->parsed()) return cmd_run(config_path, out_dir, overrides);
    return cmd_selftest(out_dir, overrides);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure at t = " << e.t << ": " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
