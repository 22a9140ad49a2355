#include "wms/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "wms/errors.hpp"
#include "wms/rng.hpp"

namespace wms {
namespace {

Matrix column_at(const std::vector<double>& data, int dim, int n) {
  Matrix out(dim, 1);
  for (int i = 0; i < dim; ++i) {
    out(i, 0) = data[static_cast<std::size_t>(n) * dim + i];
  }
  return out;
}

void append_column(std::vector<double>& data, const Matrix& column) {
  for (int i = 0; i < column.rows(); ++i) {
    data.push_back(column(i, 0));
  }
}

void check_config(const SimulationConfig& config) {
  validate_plant(config.world);
  const PlantModel& design = config.detector.plant;
  if (config.world.q() != design.q()) {
    throw DimensionMismatch("world and detector models disagree on input dimension");
  }
  if (config.world.m() != design.m()) {
    throw DimensionMismatch("world and detector models disagree on output dimension");
  }
  if (config.horizon < 1) {
    throw OutOfRange("simulation horizon must be at least 1");
  }
  if (config.attack.has_value() && config.attacker_model.has_value()) {
    const AttackerModel& am = *config.attacker_model;
    if (am.closed_a.rows() != am.closed_a.cols()) {
      throw DimensionMismatch("attacker closed-loop matrix must be square");
    }
    if (am.c.rows() != config.world.m() || am.c.cols() != am.closed_a.rows()) {
      throw DimensionMismatch("attacker output map has inconsistent dimensions");
    }
  }
}

constexpr double kBlowupNorm = 1e12;

}  // namespace

Matrix SimulationTrace::x_at(int n) const { return column_at(x, world_dim, n); }
Matrix SimulationTrace::xhat_at(int n) const { return column_at(xhat, estimate_dim, n); }
Matrix SimulationTrace::y_at(int n) const { return column_at(y, output_dim, n); }
Matrix SimulationTrace::e_at(int n) const { return column_at(e, input_dim, n); }
Matrix SimulationTrace::u_at(int n) const { return column_at(u, input_dim, n); }
Matrix SimulationTrace::v_at(int n) const { return column_at(v, output_dim, n); }
Matrix SimulationTrace::residual_at(int n) const { return column_at(residual, output_dim, n); }

SimulationTrace run_simulation(const SimulationConfig& config) {
  check_config(config);

  const PlantModel& world = config.world;
  const ClosedLoopModel& det = config.detector;
  const int px = world.p();
  const int ph = det.plant.p();
  const int q = world.q();
  const int m = world.m();
  const int steps = config.horizon;

  GaussianSampler process_noise(world.sigma_w, config.seed, streams::kProcessNoise);
  GaussianSampler measurement_noise(world.sigma_z, config.seed, streams::kMeasurementNoise);
  GaussianSampler watermark(det.sigma_e, config.seed, streams::kWatermark);

  // The observer propagates with the design-model matrices regardless of
  // what the world actually does: xhat' = (A + BK + LC) xhat - L y + B e,
  // the predictor form with the applied feedback folded in.
  const Matrix predictor_a = det.closed_a() + det.l_gain * det.plant.c;
  const Matrix& k_gain = det.k_gain;
  const Matrix& l_gain = det.l_gain;
  const Matrix& b_design = det.plant.b;
  const Matrix& c_design = det.plant.c;

  std::optional<AttackRng> attack_rng;
  Matrix attacker_closed_a;
  Matrix attacker_c;
  AttackState attack_state;
  if (config.attack.has_value()) {
    attack_rng.emplace(*config.attack, config.seed);
    if (config.attacker_model.has_value()) {
      attacker_closed_a = config.attacker_model->closed_a;
      attacker_c = config.attacker_model->c;
    } else {
      attacker_closed_a = det.closed_a();
      attacker_c = c_design;
    }
    attack_state.xi = config.attack->xi0;
  }

  SimulationTrace trace;
  trace.steps = steps;
  trace.world_dim = px;
  trace.estimate_dim = ph;
  trace.output_dim = m;
  trace.input_dim = q;
  trace.x.reserve(static_cast<std::size_t>(steps) * px);
  trace.xhat.reserve(static_cast<std::size_t>(steps) * ph);
  trace.y.reserve(static_cast<std::size_t>(steps) * m);
  trace.e.reserve(static_cast<std::size_t>(steps) * q);
  trace.u.reserve(static_cast<std::size_t>(steps) * q);
  trace.v.reserve(static_cast<std::size_t>(steps) * m);
  trace.residual.reserve(static_cast<std::size_t>(steps) * m);

  Matrix x(px, 1);
  Matrix xhat(ph, 1);

  for (int n = 0; n < steps; ++n) {
    const Matrix truth = world.c * x + measurement_noise.sample();

    Matrix v_n(m, 1);
    if (attack_rng.has_value()) {
      auto [corruption, next_state] =
          attack_step(*config.attack, attack_state, truth, attacker_closed_a,
                      attacker_c, *attack_rng);
      v_n = corruption;
      attack_state = std::move(next_state);
    }
    const Matrix y_n = truth + v_n;

    const Matrix e_n = watermark.sample();
    const Matrix u_n = k_gain * xhat + e_n;
    const Matrix residual_n = c_design * xhat - y_n;

    append_column(trace.x, x);
    append_column(trace.xhat, xhat);
    append_column(trace.y, y_n);
    append_column(trace.e, e_n);
    append_column(trace.u, u_n);
    append_column(trace.v, v_n);
    append_column(trace.residual, residual_n);

    x = world.a * x + world.b * u_n + process_noise.sample();
    xhat = predictor_a * xhat - l_gain * y_n + b_design * e_n;

    const double xn = x.frobenius_norm();
    const double hn = xhat.frobenius_norm();
    if (!(xn <= kBlowupNorm) || !(hn <= kBlowupNorm)) {
      throw NumericalBlowup("state norm exceeded 1e12 at step " + std::to_string(n + 1));
    }
  }

  return trace;
}

std::vector<Matrix> observer_consistency_view(const SimulationTrace& trace,
                                              const ClosedLoopModel& detector) {
  const int p = detector.plant.p();
  if (trace.world_dim != p || trace.estimate_dim != p) {
    throw DimensionMismatch(
        "observation-error view requires the trace and detector to share a state space");
  }
  std::vector<Matrix> deltas;
  deltas.reserve(static_cast<std::size_t>(trace.steps));
  for (int n = 0; n < trace.steps; ++n) {
    deltas.push_back(trace.xhat_at(n) - trace.x_at(n));
  }
  return deltas;
}

void write_trace_csv(const SimulationTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot open trace output file: " + path);
  }

  out << "step";
  auto emit_header = [&out](const char* stem, int dim) {
    for (int i = 0; i < dim; ++i) {
      out << ',' << stem << '_' << i;
    }
  };
  emit_header("x", trace.world_dim);
  emit_header("xhat", trace.estimate_dim);
  emit_header("y", trace.output_dim);
  emit_header("e", trace.input_dim);
  emit_header("u", trace.input_dim);
  emit_header("v", trace.output_dim);
  emit_header("res", trace.output_dim);
  out << '\n';

  char buffer[40];
  auto emit_row_part = [&](const std::vector<double>& data, int dim, int n) {
    for (int i = 0; i < dim; ++i) {
      std::snprintf(buffer, sizeof buffer, "%.17g",
                    data[static_cast<std::size_t>(n) * dim + i]);
      out << ',' << buffer;
    }
  };
  for (int n = 0; n < trace.steps; ++n) {
    out << n;
    emit_row_part(trace.x, trace.world_dim, n);
    emit_row_part(trace.xhat, trace.estimate_dim, n);
    emit_row_part(trace.y, trace.output_dim, n);
    emit_row_part(trace.e, trace.input_dim, n);
    emit_row_part(trace.u, trace.input_dim, n);
    emit_row_part(trace.v, trace.output_dim, n);
    emit_row_part(trace.residual, trace.output_dim, n);
    out << '\n';
  }
  if (!out) {
    throw Error("failed while writing trace output file: " + path);
  }
}

}  // namespace wms
