#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "wms/errors.hpp"
#include "wms/linalg.hpp"
#include "wms/model.hpp"
#include "wms/simulate.hpp"

using namespace wms;

namespace {

PlantModel double_integrator_plant(double process_var = 1e-4,
                                   double measurement_var = 1e-4) {
  PlantModel plant;
  plant.a = Matrix({{1.0, 1.0}, {0.0, 1.0}});
  plant.b = Matrix({{0.0}, {1.0}});
  plant.c = Matrix({{1.0, 0.0}});
  plant.sigma_w = SpdMatrix::scaled_identity(2, process_var);
  plant.sigma_z = SpdMatrix::scaled_identity(1, measurement_var);
  return plant;
}

ClosedLoopModel double_integrator_loop(double watermark_var = 1e-4) {
  PlantModel plant = double_integrator_plant();
  Matrix k = dlqr_gain(plant.a, plant.b, SpdMatrix::identity(2), SpdMatrix::identity(1));
  Matrix l = kalman_gain(plant.a, plant.c, plant.sigma_w, plant.sigma_z);
  return assemble_closed_loop(plant, k, l, SpdMatrix::scaled_identity(1, watermark_var));
}

SimulationConfig matched_config(const ClosedLoopModel& loop, int horizon,
                                std::uint64_t seed) {
  SimulationConfig config;
  config.world = loop.plant;
  config.detector = loop;
  config.horizon = horizon;
  config.seed = seed;
  return config;
}

// Sample second moment of a recorded signal, sum x_n x_n^T / N.
Matrix second_moment(const SimulationTrace& trace,
                     Matrix (SimulationTrace::*get)(int) const, int dim) {
  Matrix acc(dim, dim);
  for (int n = 0; n < trace.steps; ++n) {
    const Matrix col = (trace.*get)(n);
    acc += col * col.transpose();
  }
  acc *= 1.0 / trace.steps;
  return acc;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("an unforced loop stays at the origin") {
  ClosedLoopModel loop = double_integrator_loop();
  SimulationConfig config;
  config.world = loop.plant;
  config.world.sigma_w = SpdMatrix::zero(2);
  config.world.sigma_z = SpdMatrix::zero(1);
  config.detector = loop;
  config.detector.sigma_e = SpdMatrix::zero(1);
  config.horizon = 50;
  config.seed = 7;

  SimulationTrace trace = run_simulation(config);
  REQUIRE(trace.steps == 50);
  for (double value : trace.x) CHECK(value == 0.0);
  for (double value : trace.xhat) CHECK(value == 0.0);
  for (double value : trace.y) CHECK(value == 0.0);
  for (double value : trace.u) CHECK(value == 0.0);
  for (double value : trace.v) CHECK(value == 0.0);
  for (double value : trace.residual) CHECK(value == 0.0);
}

TEST_CASE("the watermark alone excites the loop and the estimator tracks it") {
  ClosedLoopModel loop = double_integrator_loop();
  SimulationConfig config;
  config.world = loop.plant;
  config.world.sigma_w = SpdMatrix::zero(2);
  config.world.sigma_z = SpdMatrix::zero(1);
  config.detector = loop;
  config.horizon = 400;
  config.seed = 3;

  SimulationTrace trace = run_simulation(config);

  double x_energy = 0.0;
  for (double value : trace.x) x_energy += value * value;
  CHECK(x_energy > 0.0);

  // With no process or measurement noise the only estimate error is
  // floating-point rounding; the observer should match the state to
  // essentially machine precision.
  auto deltas = observer_consistency_view(trace, loop);
  for (const Matrix& delta : deltas) {
    CHECK(delta.frobenius_norm() <= 1e-9);
  }
}

TEST_CASE("equal seeds reproduce traces bitwise, different seeds do not") {
  ClosedLoopModel loop = double_integrator_loop();
  SimulationConfig config = matched_config(loop, 500, 42);

  SimulationTrace first = run_simulation(config);
  SimulationTrace second = run_simulation(config);
  CHECK(first.x == second.x);
  CHECK(first.xhat == second.xhat);
  CHECK(first.y == second.y);
  CHECK(first.e == second.e);
  CHECK(first.u == second.u);
  CHECK(first.v == second.v);
  CHECK(first.residual == second.residual);

  config.seed = 43;
  SimulationTrace other = run_simulation(config);
  CHECK(first.y != other.y);
}

TEST_CASE("the applied input is exactly the state feedback plus the watermark") {
  ClosedLoopModel loop = double_integrator_loop();
  SimulationTrace trace = run_simulation(matched_config(loop, 300, 11));
  for (int n = 0; n < trace.steps; ++n) {
    const Matrix expected = loop.k_gain * trace.xhat_at(n) + trace.e_at(n);
    CHECK(trace.u_at(n) == expected);
  }
}

TEST_CASE("the recorded residual is the design-model innovation") {
  ClosedLoopModel loop = double_integrator_loop();
  SimulationTrace trace = run_simulation(matched_config(loop, 300, 11));
  for (int n = 0; n < trace.steps; ++n) {
    const Matrix expected = loop.plant.c * trace.xhat_at(n) - trace.y_at(n);
    CHECK(trace.residual_at(n) == expected);
  }
}

TEST_CASE("a matched run reproduces the design residual covariance") {
  ClosedLoopModel loop = double_integrator_loop();
  SimulationTrace trace = run_simulation(matched_config(loop, 20000, 5));

  const Matrix empirical = second_moment(trace, &SimulationTrace::residual_at, 1);
  const Matrix target = loop.residual_covariance().matrix();
  CHECK((empirical - target).frobenius_norm() <= 0.05 * target.frobenius_norm());

  // The residual should also be centered: its mean must sit within four
  // standard errors of zero.
  double mean = 0.0;
  for (double value : trace.residual) mean += value;
  mean /= trace.steps;
  const double standard_error = std::sqrt(target(0, 0) / trace.steps);
  CHECK(std::abs(mean) <= 4.0 * standard_error);
}

TEST_CASE("the observation error settles on its design covariance") {
  ClosedLoopModel loop = double_integrator_loop();
  SimulationTrace trace = run_simulation(matched_config(loop, 20000, 9));

  auto deltas = observer_consistency_view(trace, loop);
  Matrix acc(2, 2);
  for (const Matrix& delta : deltas) {
    acc += delta * delta.transpose();
  }
  acc *= 1.0 / static_cast<double>(deltas.size());

  const Matrix target = loop.sigma_delta.matrix();
  CHECK((acc - target).frobenius_norm() <= 0.05 * target.frobenius_norm());
}

TEST_CASE("the observation error view refuses mismatched state spaces") {
  ClosedLoopModel loop = double_integrator_loop();

  // A world with an extra internal mode the detector knows nothing about:
  // same input and output dimensions, one more state.
  SimulationConfig config;
  config.world.a = Matrix({{1.0, 1.0, 0.0}, {0.0, 1.0, 0.5}, {0.0, 0.0, 0.9}});
  config.world.b = Matrix({{0.0}, {1.0}, {0.0}});
  config.world.c = Matrix({{1.0, 0.0, 0.0}});
  config.world.sigma_w = SpdMatrix::scaled_identity(3, 1e-4);
  config.world.sigma_z = SpdMatrix::scaled_identity(1, 1e-4);
  config.detector = loop;
  config.horizon = 200;
  config.seed = 21;

  SimulationTrace trace = run_simulation(config);
  REQUIRE(trace.world_dim == 3);
  REQUIRE(trace.estimate_dim == 2);
  CHECK_THROWS_AS(observer_consistency_view(trace, loop), DimensionMismatch);
}

TEST_CASE("inconsistent configurations are rejected up front") {
  ClosedLoopModel loop = double_integrator_loop();

  SimulationConfig bad_inputs = matched_config(loop, 100, 1);
  bad_inputs.world.b = Matrix({{0.0, 0.0}, {1.0, 1.0}});
  CHECK_THROWS_AS(run_simulation(bad_inputs), DimensionMismatch);

  SimulationConfig bad_outputs = matched_config(loop, 100, 1);
  bad_outputs.world.c = Matrix({{1.0, 0.0}, {0.0, 1.0}});
  bad_outputs.world.sigma_z = SpdMatrix::identity(2);
  CHECK_THROWS_AS(run_simulation(bad_outputs), DimensionMismatch);

  SimulationConfig bad_horizon = matched_config(loop, 0, 1);
  CHECK_THROWS_AS(run_simulation(bad_horizon), OutOfRange);

  SimulationConfig bad_attacker = matched_config(loop, 100, 1);
  bad_attacker.attack = AttackSpec{-1.0, Matrix(2, 1), SpdMatrix::identity(2),
                                   SpdMatrix::identity(1)};
  bad_attacker.attacker_model = AttackerModel{Matrix(3, 3), Matrix({{1.0, 0.0, 0.0}})};
  CHECK_THROWS_AS(run_simulation(bad_attacker), DimensionMismatch);
}

TEST_CASE("a runaway world is reported instead of returned") {
  ClosedLoopModel loop = double_integrator_loop();
  SimulationConfig config = matched_config(loop, 300, 17);
  // Double the true dynamics so the design-model controller cannot hold the
  // loop together; the state should cross the blowup guard well before the
  // horizon.
  config.world.a = 2.0 * config.world.a;
  CHECK_THROWS_AS(run_simulation(config), NumericalBlowup);
}

TEST_CASE("attacked runs corrupt the feed and stay reproducible") {
  ClosedLoopModel loop = double_integrator_loop();
  AttackSpec spec;
  spec.alpha = -1.0;
  spec.xi0 = Matrix(2, 1);
  spec.sigma_o = loop.plant.sigma_w;
  spec.sigma_s = loop.plant.sigma_z;

  SimulationConfig config = matched_config(loop, 2000, 33);
  config.attack = spec;

  SimulationTrace attacked = run_simulation(config);
  double v_energy = 0.0;
  for (double value : attacked.v) v_energy += value * value;
  CHECK(v_energy > 0.0);

  SimulationTrace again = run_simulation(config);
  CHECK(attacked.y == again.y);
  CHECK(attacked.v == again.v);

  // Spelling out the default attacker model must not change a single bit.
  config.attacker_model = AttackerModel{loop.closed_a(), loop.plant.c};
  SimulationTrace explicit_model = run_simulation(config);
  CHECK(attacked.v == explicit_model.v);
  CHECK(attacked.y == explicit_model.y);

  // The unattacked run records an all-zero corruption channel.
  config.attack.reset();
  config.attacker_model.reset();
  SimulationTrace clean = run_simulation(config);
  for (double value : clean.v) CHECK(value == 0.0);
  CHECK(clean.y != attacked.y);
}

TEST_CASE("trace files carry a stable header and full double precision") {
  ClosedLoopModel loop = double_integrator_loop();
  SimulationConfig config = matched_config(loop, 7, 2);
  config.attack = AttackSpec{-1.0, Matrix(2, 1), loop.plant.sigma_w, loop.plant.sigma_z};
  SimulationTrace trace = run_simulation(config);

  const std::string path = "test_trace_out.csv";
  write_trace_csv(trace, path);
  const std::string contents = slurp(path);

  const std::string header = "step,x_0,x_1,xhat_0,xhat_1,y_0,e_0,u_0,v_0,res_0";
  REQUIRE(contents.substr(0, header.size()) == header);
  CHECK(contents[header.size()] == '\n');

  int newlines = 0;
  for (char ch : contents) newlines += ch == '\n';
  CHECK(newlines == 8);  // header plus one row per step

  // Writing the same trace again must give identical bytes.
  const std::string path2 = "test_trace_out_again.csv";
  write_trace_csv(trace, path2);
  CHECK(slurp(path2) == contents);

  // Values must round-trip: pull row 3 and compare a few parsed fields.
  std::istringstream lines(contents);
  std::string line;
  for (int i = 0; i < 5; ++i) std::getline(lines, line);  // header + rows 0..3
  std::istringstream fields(line);
  std::string field;
  std::getline(fields, field, ',');
  CHECK(field == "3");
  std::getline(fields, field, ',');
  CHECK(std::stod(field) == trace.x_at(3)(0, 0));
  std::getline(fields, field, ',');
  CHECK(std::stod(field) == trace.x_at(3)(1, 0));

  std::remove(path.c_str());
  std::remove(path2.c_str());
}
