#pragma once

#include <cstdint>
#include <vector>

#include "affect/svm.hpp"
#include "affect/types.hpp"

namespace affect {

struct ParamGrid {
  std::vector<double> c_values;
  std::vector<double> gamma_values;

  void validate() const;  // non-empty, positive, strictly ascending

  /// C in {2^-5, 2^-3, ..., 2^15}, gamma in {2^-15, 2^-13, ..., 2^3}.
  static ParamGrid defaults();
};

/// k disjoint index lists covering 0..n-1, sizes within one of each other;
/// with strata the per-class counts per fold are also within one. The same
/// (seed, n, k, strata) always yields the same folds.
std::vector<std::vector<int>> kfold_indices(int n, int k, const std::vector<int>* strata,
                                            uint64_t seed);

struct CvCell {
  double c = 0.0;
  double gamma = 0.0;
  std::vector<double> fold_scores;  // per-fold held-out MSE (SVR) or accuracy (SVC)
  double mean_score = 0.0;
  bool warning = false;  // some fold's training hit the iteration cap
};

struct CvResult {
  KernelParams best_params;
  double best_score = 0.0;  // min CV MSE / max CV accuracy
  std::vector<CvCell> cells;
  bool any_warning = false;
};

/// Exhaustive (C, gamma) search minimizing mean held-out MSE; ties go to
/// the smaller C, then the smaller gamma.
CvResult grid_search_svr(const Matrix& x, const std::vector<double>& y, const ParamGrid& grid,
                         const std::vector<std::vector<int>>& folds, double epsilon,
                         const TrainOptions& opts = {});

/// Same search maximizing mean held-out accuracy (labels +/-1).
CvResult grid_search_svc(const Matrix& x, const std::vector<int>& y, const ParamGrid& grid,
                         const std::vector<std::vector<int>>& folds,
                         const TrainOptions& opts = {});

double training_mse(const SvrModel& model, const Matrix& x, const std::vector<double>& y);

/// Fraction of the positive examples predicted positive.
double training_tpr(const SvcModel& model, const Matrix& x, const std::vector<int>& y);

}  // namespace affect
