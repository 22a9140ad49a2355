#pragma once

// ---------------------------------------------------------------------------
// Ready-made study systems: a double-integrator bench case whose watermark
// needs two steps to reach the measured output, and a discretized ground
// vehicle (position/heading kinematics under two actuators) optionally
// augmented with a first-order gust disturbance that pushes the lateral
// error. The experiment matrix pairs detectors that do and do not model the
// gust with an attacker that replays a gust-free vehicle, the four runs a
// monitoring study needs.
// ---------------------------------------------------------------------------

#include <cstdint>
#include <vector>

#include "wms/attack.hpp"
#include "wms/model.hpp"
#include "wms/simulate.hpp"

namespace wms {

// First-order autoregressive gust: chi' = pole * chi + noise, integrated by
// one nominated state row per step.
struct WindModel {
  double pole = 0.9;
  double chi_var = 2e-6;
  int coupling_row = 1;
};

// Controller weights and window length for the vehicle study. The state
// weight leans hard on regulation because the sensor-replacement attack
// destabilizes softly-tuned loops; the short window keeps the scatter of a
// mismatched run away from the acceptance region of the likelihood score.
inline constexpr double kVehicleQScale = 300.0;
inline constexpr double kVehicleRScale = 1.0;
inline constexpr int kVehicleWindowLength = 7;
inline constexpr double kVehicleWatermarkVariance = 0.5;
inline constexpr double kDoubleIntegratorWatermarkVariance = 1e-4;

PlantModel build_double_integrator(double process_var = 1e-4,
                                   double measurement_var = 1e-4);

// Five vehicle states (lateral position, lateral error, heading, lateral
// velocity, yaw rate), the first three measured. include_wind appends the
// gust state.
PlantModel build_vehicle(bool include_wind, const WindModel& wind = WindModel{});

// Full sensor replacement seeded with the plant's own noise levels.
AttackSpec replay_attack_preset(const PlantModel& plant);

// Partial replacement tuned for the vehicle: alpha = -0.6 against a
// gust-free five-state vehicle model.
AttackSpec vehicle_attack_preset();

// Quadratic-regulator feedback and steady-state estimator gains with
// identity weights scaled by q_scale and r_scale, assembled into the full
// design model.
ClosedLoopModel design_closed_loop(const PlantModel& plant, const SpdMatrix& sigma_e,
                                   double q_scale, double r_scale);

// The four vehicle runs: detector without/with the gust model, each honest
// and attacked, all against the same gusty world. The attacker always
// models the gust-free vehicle.
std::vector<SimulationConfig> experiment_matrix(int horizon = 20000,
                                                std::uint64_t seed = 1);

}  // namespace wms
