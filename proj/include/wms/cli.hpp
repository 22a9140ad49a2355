#pragma once

// ---------------------------------------------------------------------------
// Batch experiment driver. A RunConfig names (or inlines) a system, picks
// controller weights and a watermark, optionally an attack, and lists the
// seeds to run. The three commands mirror a monitoring study's workflow:
// calibrate a threshold, run seeded experiments, or reproduce the full
// four-run vehicle demo. Commands return process exit codes (0 success,
// 2 configuration error, 3 numerical failure) instead of throwing.
// ---------------------------------------------------------------------------

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "wms/attack.hpp"
#include "wms/model.hpp"

namespace wms {

struct RunConfig {
  // Either a named scenario (double-integrator, vehicle, vehicle-wind) or a
  // full inline plant from the [scenario] section of a config file.
  std::string scenario = "vehicle";
  std::optional<PlantModel> inline_plant;

  // Controller weight scales for the identity-weight regulator design;
  // zero means "use the scenario default".
  double q_scale = 0.0;
  double r_scale = 0.0;

  // Watermark covariance: a full matrix wins over the scalar variance,
  // which scales the identity; zero variance means the scenario default.
  std::optional<Matrix> watermark;
  double watermark_variance = 0.0;

  // Attack preset: none, replay, vehicle-preset, or inline (fields in the
  // [attack] config section).
  std::string attack = "none";
  std::optional<AttackSpec> inline_attack;

  bool detector_wind = false;
  int horizon = 20000;
  std::vector<std::uint64_t> seeds = {1};
  int ell = 0;  // 0 = scenario default window length
  double alpha_fa = 0.05;
  int calibration_runs = 500;
  std::string output_dir = ".";
};

// Sectioned key = value text; matrix literals separate rows with ';' and
// entries with whitespace. Throws std::invalid_argument on malformed text.
RunConfig parse_run_config(const std::string& text);
std::string serialize_run_config(const RunConfig& config);

// Runs every seed (worker count capped by WMS_THREADS), writing
// trace_<seed>.csv and report_<seed>.csv per seed plus summary.csv and
// config.cfg into output_dir. Reuses output_dir/tau.csv when its
// ell/alpha_fa/runs match; calibrates in memory otherwise.
int cmd_run(const RunConfig& config, std::ostream& out = std::cout,
            std::ostream& diag = std::cerr);

// Calibrates the detection threshold for the configured (honest) system,
// prints it, and caches it to output_dir/tau.csv.
int cmd_calibrate(const RunConfig& config, std::ostream& out = std::cout,
                  std::ostream& diag = std::cerr);

// The four-run vehicle study (detector without/with the gust model, honest
// and attacked, ten seeds each) into demo_summary.csv. Only the vehicle
// scenario has a demo.
int cmd_demo(const std::string& scenario, const RunConfig& config,
             std::ostream& out = std::cout, std::ostream& diag = std::cerr);

}  // namespace wms
