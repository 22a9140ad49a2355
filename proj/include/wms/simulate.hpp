#pragma once

// ---------------------------------------------------------------------------
// Seeded closed-loop trajectory generation. The world model (what actually
// evolves) and the detector model (what the controller and observer were
// designed against) are deliberately separate, so experiments can study what
// happens when reality has dynamics the design model lacks. The optional
// attack corrupts the sensor feed between the world and the observer.
// ---------------------------------------------------------------------------

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wms/attack.hpp"
#include "wms/model.hpp"

namespace wms {

// The closed-loop dynamics the attacker believes the controller realizes,
// and the output map it spoofs through. Defaults to the detector's own
// closed loop when absent; the split matters when the detector carries
// augmented states the attacker does not model.
struct AttackerModel {
  Matrix closed_a;
  Matrix c;
};

struct SimulationConfig {
  PlantModel world;          // true dynamics, possibly disturbance-augmented
  ClosedLoopModel detector;  // design model: gains, watermark, covariances
  std::optional<AttackSpec> attack;
  std::optional<AttackerModel> attacker_model;
  int horizon = 20000;
  std::uint64_t seed = 1;
};

// Flat column-major-per-step storage for every signal of a run. Entry i of
// step n of e.g. x sits at x[n * world_dim + i].
struct SimulationTrace {
  int steps = 0;
  int world_dim = 0;     // state dimension of the world model
  int estimate_dim = 0;  // state dimension of the detector model
  int output_dim = 0;
  int input_dim = 0;

  std::vector<double> x;         // world state per step
  std::vector<double> xhat;      // observer estimate per step
  std::vector<double> y;         // measured (possibly corrupted) output
  std::vector<double> e;         // watermark draw
  std::vector<double> u;         // applied input, u = K xhat + e
  std::vector<double> v;         // sensor corruption (zero when unattacked)
  std::vector<double> residual;  // C xhat - y

  Matrix x_at(int n) const;
  Matrix xhat_at(int n) const;
  Matrix y_at(int n) const;
  Matrix e_at(int n) const;
  Matrix u_at(int n) const;
  Matrix v_at(int n) const;
  Matrix residual_at(int n) const;
};

// Runs the watermarked loop for config.horizon steps from zero initial
// state. Noise is drawn from per-source sub-streams of config.seed, so
// equal configs give bitwise-equal traces. Throws DimensionMismatch on
// inconsistent config dimensions and NumericalBlowup if a state norm
// exceeds 1e12.
SimulationTrace run_simulation(const SimulationConfig& config);

// Per-step observation error xhat - x; only meaningful when the world and
// detector share a state space. Throws DimensionMismatch otherwise.
std::vector<Matrix> observer_consistency_view(const SimulationTrace& trace,
                                              const ClosedLoopModel& detector);

// Writes one row per step with header
// step,x_0..,xhat_0..,y_0..,e_0..,u_0..,v_0..,res_0..
void write_trace_csv(const SimulationTrace& trace, const std::string& path);

}  // namespace wms
