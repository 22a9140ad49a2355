#include "wms/scenarios.hpp"

#include "wms/errors.hpp"
#include "wms/linalg.hpp"

namespace wms {

PlantModel build_double_integrator(double process_var, double measurement_var) {
  PlantModel plant;
  plant.a = Matrix({{1.0, 1.0}, {0.0, 1.0}});
  plant.b = Matrix({{0.0}, {1.0}});
  plant.c = Matrix({{1.0, 0.0}});
  plant.sigma_w = SpdMatrix::scaled_identity(2, process_var);
  plant.sigma_z = SpdMatrix::scaled_identity(1, measurement_var);
  return plant;
}

PlantModel build_vehicle(bool include_wind, const WindModel& wind) {
  PlantModel plant;
  plant.a = Matrix({{1.0, 0.0, 0.0, 1.0 / 10.0, 0.0},
                    {1.0 / 2.0, 1.0, 0.0, 1.0 / 40.0, 0.0},
                    {0.0, 0.0, 1.0, 0.0, 1.0 / 2.0},
                    {0.0, 0.0, 0.0, 1.0, 0.0},
                    {0.0, 0.0, 0.0, 0.0, 1.0}});
  plant.b = Matrix({{1.0 / 400.0, 0.0},
                    {1.0 / 2400.0, 0.0},
                    {0.0, 1.0 / 800.0},
                    {1.0 / 20.0, 0.0},
                    {0.0, 1.0 / 20.0}});
  plant.c = Matrix::hstack(Matrix::identity(3), Matrix(3, 2));
  plant.sigma_w = SpdMatrix::scaled_identity(5, 1e-8);
  plant.sigma_z = SpdMatrix::scaled_identity(3, 1e-5);
  if (!include_wind) {
    return plant;
  }

  if (wind.coupling_row < 0 || wind.coupling_row >= 5) {
    throw OutOfRange("gust coupling row must name a vehicle state");
  }
  Matrix coupling(5, 1);
  coupling(wind.coupling_row, 0) = 1.0;
  plant.a = Matrix::vstack(Matrix::hstack(plant.a, coupling),
                           Matrix::hstack(Matrix(1, 5), Matrix({{wind.pole}})));
  plant.b = Matrix::vstack(plant.b, Matrix(1, 2));
  plant.c = Matrix::hstack(plant.c, Matrix(3, 1));
  plant.sigma_w = SpdMatrix::block_diagonal(
      plant.sigma_w, SpdMatrix(Matrix({{wind.chi_var}})));
  return plant;
}

AttackSpec replay_attack_preset(const PlantModel& plant) {
  return AttackSpec{-1.0, Matrix(plant.p(), 1), plant.sigma_w, plant.sigma_z};
}

AttackSpec vehicle_attack_preset() {
  return AttackSpec{-0.6, Matrix(5, 1), SpdMatrix::scaled_identity(5, 1e-8),
                    SpdMatrix::scaled_identity(3, 1e-8)};
}

ClosedLoopModel design_closed_loop(const PlantModel& plant, const SpdMatrix& sigma_e,
                                   double q_scale, double r_scale) {
  const Matrix k = dlqr_gain(plant.a, plant.b,
                             SpdMatrix::scaled_identity(plant.p(), q_scale),
                             SpdMatrix::scaled_identity(plant.q(), r_scale));
  const Matrix l = kalman_gain(plant.a, plant.c, plant.sigma_w, plant.sigma_z);
  return assemble_closed_loop(plant, k, l, sigma_e);
}

std::vector<SimulationConfig> experiment_matrix(int horizon, std::uint64_t seed) {
  const PlantModel world = build_vehicle(true);
  const SpdMatrix sigma_e = SpdMatrix::scaled_identity(2, kVehicleWatermarkVariance);

  const ClosedLoopModel plain =
      design_closed_loop(build_vehicle(false), sigma_e, kVehicleQScale, kVehicleRScale);
  const ClosedLoopModel gust_aware =
      design_closed_loop(world, sigma_e, kVehicleQScale, kVehicleRScale);

  // Whatever the detector models, the attacker replays the gust-free
  // vehicle under the plain feedback design.
  const AttackerModel attacker{plain.closed_a(), plain.plant.c};
  const AttackSpec attack = vehicle_attack_preset();

  std::vector<SimulationConfig> configs;
  configs.reserve(4);
  for (const ClosedLoopModel* detector : {&plain, &gust_aware}) {
    for (bool attacked : {false, true}) {
      SimulationConfig config;
      config.world = world;
      config.detector = *detector;
      if (attacked) {
        config.attack = attack;
        config.attacker_model = attacker;
      }
      config.horizon = horizon;
      config.seed = seed;
      configs.push_back(std::move(config));
    }
  }
  return configs;
}

}  // namespace wms
