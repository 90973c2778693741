#pragma once

#include <span>
#include <vector>

#include "affect/kernel.hpp"
#include "affect/types.hpp"

namespace affect {

/// Both machines are trained by sequential minimal optimization on the
/// dual with maximal-violating-pair selection, fixed scan order and no
/// shrinking. Training is deterministic for fixed inputs.

struct SvrModel {
  Matrix support_vectors;           // rows with nonzero coefficient
  std::vector<double> dual_coeffs;  // beta_i = alpha_i - alpha_i^*, |beta_i| <= C
  double bias = 0.0;
  KernelParams params;
};

struct SvcModel {
  Matrix support_vectors;
  std::vector<double> dual_coeffs;  // alpha_i * y_i, 0 <= alpha_i <= C
  double bias = 0.0;
  KernelParams params;
};

struct TrainOptions {
  double kkt_tol = 1e-3;                   // stop when max violating pair gap <= this
  long long max_pair_updates = 10'000'000;
  size_t cache_rows = 0;                   // 0 = unbounded kernel row cache
  bool track_dual = false;                 // record dual objective once per sweep
};

struct TrainReport {
  bool converged = false;
  long long pair_updates = 0;
  double dual_objective = 0.0;   // maximization value at the final iterate
  double kkt_violation = 0.0;
  std::vector<double> dual_trace;
};

struct SvrTrainResult {
  SvrModel model;
  TrainReport report;
};

struct SvcTrainResult {
  SvcModel model;
  TrainReport report;
};

/// epsilon-insensitive support vector regression. Bias comes from the mean
/// stationarity value over free support vectors; with none free it falls
/// back to the mean target.
SvrTrainResult train_svr(const Matrix& x, const std::vector<double>& y,
                         const KernelParams& params, const TrainOptions& opts = {});

double predict_svr(const SvrModel& model, std::span<const double> x);

/// C-support vector classification on +/-1 labels.
SvcTrainResult train_svc(const Matrix& x, const std::vector<int>& y,
                         const KernelParams& params, const TrainOptions& opts = {});

struct SvcPrediction {
  int label = 1;  // sign of the decision value, 0 maps to +1
  double decision_value = 0.0;
};

SvcPrediction predict_svc(const SvcModel& model, std::span<const double> x);

struct DualDiagnostics {
  double dual_objective = 0.0;
  double max_kkt_violation = 0.0;
};

/// Recomputes the dual objective and the maximal violating pair gap from
/// scratch for a model and the data it was trained on. Support vectors are
/// matched back to training rows by exact equality.
DualDiagnostics svr_dual_diagnostics(const SvrModel& model, const Matrix& x,
                                     const std::vector<double>& y);
DualDiagnostics svc_dual_diagnostics(const SvcModel& model, const Matrix& x,
                                     const std::vector<int>& y);

}  // namespace affect
