#include "wms/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "wms/errors.hpp"

namespace wms {
namespace {

void check_trace_model(const SimulationTrace& trace, const ClosedLoopModel& model) {
  if (trace.output_dim != model.plant.m() || trace.input_dim != model.plant.q()) {
    throw DimensionMismatch("trace and model disagree on output or input dimension");
  }
}

void check_start(const SimulationTrace& trace, int start) {
  if (start < 0 || start >= trace.steps) {
    throw OutOfRange("statistic start index must lie inside the trace");
  }
}

// Running Frobenius deviation of an accumulated matrix average from a fixed
// target. fold(n) must return the step-n increment.
template <typename Fold>
std::vector<double> running_deviation(int steps, int start, const Matrix& target,
                                      Fold fold) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps - start));
  Matrix acc(target.rows(), target.cols());
  for (int n = start; n < steps; ++n) {
    acc += fold(n);
    const double scale = 1.0 / (n - start + 1);
    out.push_back((scale * acc - target).frobenius_norm());
  }
  return out;
}

}  // namespace

double DetectionReport::reject_rate() const {
  if (verdicts.empty()) {
    return 0.0;
  }
  double rejected = 0.0;
  for (bool verdict : verdicts) {
    rejected += verdict ? 1.0 : 0.0;
  }
  return rejected / static_cast<double>(verdicts.size());
}

std::vector<double> deviation_stat_covariance(const SimulationTrace& trace,
                                              const ClosedLoopModel& model,
                                              int start) {
  check_trace_model(trace, model);
  check_start(trace, start);
  const Matrix target = model.residual_covariance().matrix();
  return running_deviation(trace.steps, start, target, [&](int n) {
    const Matrix r = trace.residual_at(n);
    return r * r.transpose();
  });
}

std::vector<double> deviation_stat_watermark(const SimulationTrace& trace,
                                             const ClosedLoopModel& model,
                                             int start) {
  check_trace_model(trace, model);
  check_start(trace, start);
  const int lag = model.kprime + 1;
  const Matrix target(trace.output_dim, trace.input_dim);
  return running_deviation(trace.steps, start, target, [&](int n) {
    if (n < lag) {
      return Matrix(trace.output_dim, trace.input_dim);
    }
    return trace.residual_at(n) * trace.e_at(n - lag).transpose();
  });
}

std::vector<double> legacy_lag_stat(const SimulationTrace& trace,
                                    const ClosedLoopModel& model, int lag) {
  check_trace_model(trace, model);
  if (lag < 1) {
    throw OutOfRange("correlation lag must be at least 1");
  }
  const Matrix target(model.plant.p(), trace.input_dim);
  return running_deviation(trace.steps, 0, target, [&](int n) {
    if (n < lag) {
      return Matrix(model.plant.p(), trace.input_dim);
    }
    return model.l_gain * trace.residual_at(n) * trace.e_at(n - lag).transpose();
  });
}

std::vector<double> legacy_lag1_stat(const SimulationTrace& trace,
                                     const ClosedLoopModel& model) {
  return legacy_lag_stat(trace, model, 1);
}

Matrix lagged_correlation(const SimulationTrace& trace, int lag) {
  if (lag < 0) {
    throw OutOfRange("correlation lag must be nonnegative");
  }
  Matrix acc(trace.output_dim, trace.input_dim);
  for (int n = lag; n < trace.steps; ++n) {
    acc += trace.residual_at(n) * trace.e_at(n - lag).transpose();
  }
  if (trace.steps > 0) {
    acc *= 1.0 / trace.steps;
  }
  return acc;
}

std::vector<PsiVector> build_psi_sequence(const SimulationTrace& trace, int kprime) {
  if (kprime < 0) {
    throw OutOfRange("kprime must be nonnegative");
  }
  std::vector<PsiVector> psi;
  const int first = kprime + 1;
  if (trace.steps <= first) {
    return psi;
  }
  psi.reserve(static_cast<std::size_t>(trace.steps - first));
  for (int n = first; n < trace.steps; ++n) {
    psi.push_back(PsiVector{trace.residual_at(n), trace.e_at(n - first)});
  }
  return psi;
}

SpdMatrix windowed_scatter(const std::vector<PsiVector>& psi, int ell,
                           int window_index) {
  if (psi.empty()) {
    throw OutOfRange("cannot window an empty sample sequence");
  }
  const int m = psi.front().residual_part.rows();
  const int q = psi.front().excitation_part.rows();
  const int d = m + q;
  if (ell < d) {
    throw WindowTooShort("window length must be at least the joint dimension");
  }
  if (window_index < 0 ||
      static_cast<std::size_t>(window_index + 1) * ell > psi.size()) {
    throw OutOfRange("window does not fit inside the sample sequence");
  }

  Matrix acc(d, d);
  const std::size_t base = static_cast<std::size_t>(window_index) * ell;
  for (int j = 0; j < ell; ++j) {
    const PsiVector& sample = psi[base + j];
    const Matrix stacked = Matrix::vstack(sample.residual_part, sample.excitation_part);
    acc += stacked * stacked.transpose();
  }
  acc *= 1.0 / ell;
  return SpdMatrix(acc);
}

double wishart_nll(const SpdMatrix& s, const SpdMatrix& sigma_delta_c,
                   const SpdMatrix& sigma_e, int ell) {
  const int d = s.dim();
  if (sigma_delta_c.dim() + sigma_e.dim() != d) {
    throw DimensionMismatch("scatter dimension must match the stacked design covariances");
  }
  if (ell < 1) {
    throw WindowTooShort("window length must be positive");
  }

  const Matrix factor = cholesky(s);
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) {
    if (!(factor(i, i) > 0.0)) {
      throw SingularWindow("window scatter is singular");
    }
    logdet += 2.0 * std::log(factor(i, i));
  }

  const Matrix inv_targets = Matrix::vstack(
      Matrix::hstack(inverse_spd(sigma_delta_c.matrix()),
                     Matrix(sigma_delta_c.dim(), sigma_e.dim())),
      Matrix::hstack(Matrix(sigma_e.dim(), sigma_delta_c.dim()),
                     inverse_spd(sigma_e.matrix())));
  double trace_term = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      trace_term += inv_targets(i, j) * s(j, i);
    }
  }

  return (d + 1 - ell) * logdet + trace_term;
}

double calibrate_threshold(const ClosedLoopModel& model, int ell, double alpha_fa,
                           int runs, std::uint64_t seed) {
  if (!(alpha_fa > 0.0 && alpha_fa < 1.0)) {
    throw OutOfRange("false-alarm rate must lie strictly between 0 and 1");
  }
  if (runs < 100) {
    throw OutOfRange("calibration needs at least 100 windows");
  }
  const int d = model.plant.m() + model.plant.q();
  if (ell < d) {
    throw WindowTooShort("window length must be at least the joint dimension");
  }

  // Skip enough leading windows to let the loop reach its stationary
  // distribution before any window is scored.
  const int skip = std::max(1, (256 + ell - 1) / ell);

  SimulationConfig config;
  config.world = model.plant;
  config.detector = model;
  config.horizon = model.kprime + 1 + (skip + runs) * ell;
  config.seed = seed;
  const SimulationTrace trace = run_simulation(config);

  const std::vector<PsiVector> psi = build_psi_sequence(trace, model.kprime);
  const SpdMatrix residual_cov = model.residual_covariance();
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(runs));
  for (int w = skip; w < skip + runs; ++w) {
    scores.push_back(
        wishart_nll(windowed_scatter(psi, ell, w), residual_cov, model.sigma_e, ell));
  }

  std::sort(scores.begin(), scores.end());
  const double h = (scores.size() - 1) * (1.0 - alpha_fa);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= scores.size()) {
    return scores.back();
  }
  return scores[lo] + (h - lo) * (scores[lo + 1] - scores[lo]);
}

bool hypothesis_test(double nll, double tau) { return nll > tau; }

std::vector<Matrix> specialized_full_state_residual(const SimulationTrace& trace,
                                                    const ClosedLoopModel& model) {
  const PlantModel& plant = model.plant;
  const int p = plant.p();
  constexpr double kFormTolerance = 1e-12;
  if (plant.m() != p ||
      (plant.c - Matrix::identity(p)).max_abs() > kFormTolerance ||
      (model.l_gain + plant.a).max_abs() > kFormTolerance) {
    throw NotSpecialCase(
        "requires full state measurement (c = identity) and gain l = -a");
  }
  check_trace_model(trace, model);

  std::vector<Matrix> innovations;
  if (trace.steps < 2) {
    return innovations;
  }
  innovations.reserve(static_cast<std::size_t>(trace.steps - 1));
  const Matrix bk = plant.b * model.k_gain;
  for (int n = 1; n < trace.steps; ++n) {
    innovations.push_back(trace.y_at(n) - plant.a * trace.y_at(n - 1) -
                          bk * trace.xhat_at(n - 1) - plant.b * trace.e_at(n - 1));
  }
  return innovations;
}

DetectionReport analyze_trace(const SimulationTrace& trace, const ClosedLoopModel& model,
                              double tau, int ell, double alpha_fa) {
  check_trace_model(trace, model);
  const int d = model.plant.m() + model.plant.q();
  if (ell == 0) {
    ell = 20 * d;
  }
  if (ell < d) {
    throw WindowTooShort("window length must be at least the joint dimension");
  }

  DetectionReport report;
  report.tau = tau;
  report.ell = ell;
  report.alpha_fa = alpha_fa;
  report.kprime = model.kprime;
  report.d1 = deviation_stat_covariance(trace, model);
  report.d2 = deviation_stat_watermark(trace, model);

  const std::vector<PsiVector> psi = build_psi_sequence(trace, model.kprime);
  const SpdMatrix residual_cov = model.residual_covariance();
  const int windows = static_cast<int>(psi.size()) / ell;
  report.nll.reserve(static_cast<std::size_t>(windows));
  report.verdicts.reserve(static_cast<std::size_t>(windows));
  for (int w = 0; w < windows; ++w) {
    const double score =
        wishart_nll(windowed_scatter(psi, ell, w), residual_cov, model.sigma_e, ell);
    report.nll.push_back(score);
    report.verdicts.push_back(hypothesis_test(score, tau));
  }
  return report;
}

void write_report_csv(const DetectionReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot open report output file: " + path);
  }
  out << "step_or_window,d1,d2,nll,verdict,tau\n";

  char buffer[40];
  auto emit = [&](double value) {
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    out << buffer;
  };
  for (std::size_t n = 0; n < report.d1.size(); ++n) {
    out << n << ',';
    emit(report.d1[n]);
    out << ',';
    emit(report.d2[n]);
    // A window w spans steps kprime+1 ... kprime+(w+1)*ell and reports on
    // the row where it completes.
    const long offset = static_cast<long>(n) - report.kprime;
    const bool boundary = report.ell > 0 && offset >= report.ell &&
                          offset % report.ell == 0 &&
                          offset / report.ell <= static_cast<long>(report.nll.size());
    if (boundary) {
      const std::size_t w = static_cast<std::size_t>(offset / report.ell) - 1;
      out << ',';
      emit(report.nll[w]);
      out << ',' << (report.verdicts[w] ? 1 : 0) << ',';
      emit(report.tau);
      out << '\n';
    } else {
      out << ",,,\n";
    }
  }
  if (!out) {
    throw Error("failed while writing report output file: " + path);
  }
}

}  // namespace wms
