#pragma once

// ---------------------------------------------------------------------------
// Watermark-based attack detection. Two layers:
//
//  * Running deviation statistics that converge to zero (or to a known
//    constant) on honest traces and plateau away from it under attack.
//    These are asymptotic: they say what an infinite trace would reveal.
//  * A windowed test that forms the joint scatter of the residual and a
//    lagged copy of the watermark over short disjoint windows, scores each
//    window with a Wishart negative log likelihood against the design
//    covariances, and compares the score to a calibrated threshold. This
//    is the finite-sample decision rule.
//
// All statistics consume a SimulationTrace plus the detector's design model
// and never look at the true world state, exactly like a deployed monitor.
// ---------------------------------------------------------------------------

#include <cstdint>
#include <string>
#include <vector>

#include "wms/model.hpp"
#include "wms/simulate.hpp"

namespace wms {

// One joint sample: the residual now and the watermark from kprime + 1
// steps earlier, the most recent excitation the residual can reflect.
struct PsiVector {
  Matrix residual_part;
  Matrix excitation_part;
};

struct DetectionReport {
  std::vector<double> d1;      // running residual-covariance deviation, per step
  std::vector<double> d2;      // running watermark-correlation deviation, per step
  std::vector<double> nll;     // one score per completed window
  std::vector<bool> verdicts;  // true = window rejected (attack suspected)
  double tau = 0.0;
  int ell = 0;
  double alpha_fa = 0.0;
  int kprime = 0;

  double reject_rate() const;
};

// Frobenius deviation of the running residual second moment from the design
// value c sigma_delta c' + sigma_z. Element j covers steps start..start+j.
std::vector<double> deviation_stat_covariance(const SimulationTrace& trace,
                                              const ClosedLoopModel& model,
                                              int start = 0);

// Frobenius norm of the running correlation between the residual and the
// watermark lagged by kprime + 1; honest traces drive it to zero.
// Watermark draws before the trace start count as zero.
std::vector<double> deviation_stat_watermark(const SimulationTrace& trace,
                                             const ClosedLoopModel& model,
                                             int start = 0);

// Older observer-gain-weighted correlation test at an arbitrary lag. Kept
// for comparison runs: it misses attacks whenever the watermark needs more
// than `lag` steps to reach the measured outputs.
std::vector<double> legacy_lag_stat(const SimulationTrace& trace,
                                    const ClosedLoopModel& model, int lag);
std::vector<double> legacy_lag1_stat(const SimulationTrace& trace,
                                     const ClosedLoopModel& model);

// Final running correlation matrix (1/N) sum r_n e_{n-lag}' as one block,
// for checking against closed-form limits.
Matrix lagged_correlation(const SimulationTrace& trace, int lag);

// Joint samples for the windowed test, one per step n >= kprime + 1.
std::vector<PsiVector> build_psi_sequence(const SimulationTrace& trace, int kprime);

// Mean outer product of window `window_index` (disjoint windows of length
// ell). Throws WindowTooShort when ell cannot give full rank and OutOfRange
// when the window is not fully contained in the sequence.
SpdMatrix windowed_scatter(const std::vector<PsiVector>& psi, int ell,
                           int window_index);

// Wishart negative log likelihood of a window scatter s against the design
// covariances of the residual (sigma_delta_c) and watermark (sigma_e).
// Throws SingularWindow when s has no positive-definite Cholesky factor.
double wishart_nll(const SpdMatrix& s, const SpdMatrix& sigma_delta_c,
                   const SpdMatrix& sigma_e, int ell);

// Empirical (1 - alpha_fa) quantile of the window score on a fresh honest
// run of the model; deterministic in all arguments. runs is the number of
// scored windows and must be at least 100; alpha_fa must lie in (0, 1).
double calibrate_threshold(const ClosedLoopModel& model, int ell, double alpha_fa,
                           int runs, std::uint64_t seed);

// Reject (true) when the score exceeds the threshold; the boundary accepts.
bool hypothesis_test(double nll, double tau);

// Simplified one-step innovation available when every state is measured
// directly (c = identity) and the observer gain is the full correction
// l = -a. Returns the sequence y_{n+1} - a y_n - b k xhat_n - b e_n, which
// equals the negated residual without needing the estimate's own history.
// Throws NotSpecialCase when the model is not of this form.
std::vector<Matrix> specialized_full_state_residual(const SimulationTrace& trace,
                                                    const ClosedLoopModel& model);

// Full pass over one trace: running statistics plus one windowed verdict
// per complete window, windows starting at step kprime + 1. ell = 0 selects
// the default window length 20 * (outputs + inputs).
DetectionReport analyze_trace(const SimulationTrace& trace, const ClosedLoopModel& model,
                              double tau, int ell = 0, double alpha_fa = 0.05);

// One row per step with header step_or_window,d1,d2,nll,verdict,tau; the
// window columns are filled only on rows where a window completes.
void write_report_csv(const DetectionReport& report, const std::string& path);

}  // namespace wms
