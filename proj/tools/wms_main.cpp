// Command line front end: run | calibrate | demo, flags mirroring RunConfig.
// A --config file is read first; explicit flags override its values.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "wms/cli.hpp"

namespace {

// Applies flag values on top of a config-file baseline. Only flags the user
// actually passed override the file.
void apply_flag_overrides(const CLI::App& cmd, wms::RunConfig& config,
                          const std::string& scenario, const std::string& attack,
                          bool detector_wind, int horizon,
                          const std::vector<std::uint64_t>& seeds, int ell,
                          double alpha_fa, int calibration_runs,
                          const std::string& out_dir, double q_scale, double r_scale,
                          double watermark_variance) {
  if (cmd.count("--scenario") > 0) config.scenario = scenario;
  if (cmd.count("--attack") > 0) {
    config.attack = attack;
    config.inline_attack.reset();
  }
  if (cmd.count("--detector-wind") > 0) config.detector_wind = detector_wind;
  if (cmd.count("--horizon") > 0) config.horizon = horizon;
  if (cmd.count("--seeds") > 0) config.seeds = seeds;
  if (cmd.count("--ell") > 0) config.ell = ell;
  if (cmd.count("--alpha-fa") > 0) config.alpha_fa = alpha_fa;
  if (cmd.count("--calibration-runs") > 0) config.calibration_runs = calibration_runs;
  if (cmd.count("--out") > 0) config.output_dir = out_dir;
  if (cmd.count("--q-scale") > 0) config.q_scale = q_scale;
  if (cmd.count("--r-scale") > 0) config.r_scale = r_scale;
  if (cmd.count("--watermark-variance") > 0) {
    config.watermark_variance = watermark_variance;
    config.watermark.reset();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Watermarked control loop simulator and attack detector"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scenario = "vehicle";
  std::string attack = "none";
  bool detector_wind = false;
  int horizon = 20000;
  std::vector<std::uint64_t> seeds = {1};
  int ell = 0;
  double alpha_fa = 0.05;
  int calibration_runs = 500;
  std::string out_dir = ".";
  double q_scale = 0.0;
  double r_scale = 0.0;
  double watermark_variance = 0.0;
  std::string demo_name = "vehicle";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Config file to load first");
    cmd->add_option("--scenario", scenario,
                    "double-integrator, vehicle, or vehicle-wind");
    cmd->add_option("--attack", attack, "none, replay, or vehicle-preset");
    cmd->add_flag("--detector-wind", detector_wind,
                  "Give the detector the gust model");
    cmd->add_option("--horizon", horizon, "Steps per run");
    cmd->add_option("--seeds", seeds, "Seeds to run");
    cmd->add_option("--ell", ell, "Window length (0 = scenario default)");
    cmd->add_option("--alpha-fa", alpha_fa, "Target false-alarm rate");
    cmd->add_option("--calibration-runs", calibration_runs,
                    "Windows scored during calibration");
    cmd->add_option("--out", out_dir, "Output directory");
    cmd->add_option("--q-scale", q_scale, "State weight scale (0 = default)");
    cmd->add_option("--r-scale", r_scale, "Input weight scale (0 = default)");
    cmd->add_option("--watermark-variance", watermark_variance,
                    "Watermark variance (0 = scenario default)");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "Run seeded experiments");
  add_common(run_cmd);
  CLI::App* calibrate_cmd =
      app.add_subcommand("calibrate", "Calibrate the detection threshold");
  add_common(calibrate_cmd);
  CLI::App* demo_cmd = app.add_subcommand("demo", "Reproduce the four-run study");
  add_common(demo_cmd);
  demo_cmd->add_option("name", demo_name, "Scenario to demo (vehicle)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    app.exit(e);
    return 2;
  }

  CLI::App* active = run_cmd->parsed() ? run_cmd
                     : calibrate_cmd->parsed() ? calibrate_cmd
                                               : demo_cmd;

  wms::RunConfig config;
  if (active->count("--config") > 0) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      std::cerr << "config error: cannot read '" << config_path << "'\n";
      return 2;
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
      config = wms::parse_run_config(text.str());
    } catch (const std::invalid_argument& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    }
  }
  apply_flag_overrides(*active, config, scenario, attack, detector_wind, horizon,
                       seeds, ell, alpha_fa, calibration_runs, out_dir, q_scale,
                       r_scale, watermark_variance);

  if (run_cmd->parsed()) {
    return wms::cmd_run(config);
  }
  if (calibrate_cmd->parsed()) {
    return wms::cmd_calibrate(config);
  }
  return wms::cmd_demo(demo_name, config);
}
