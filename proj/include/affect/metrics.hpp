#pragma once

#include <optional>
#include <string>
#include <vector>

#include "affect/types.hpp"

namespace affect {

inline constexpr double kDefaultKldSmoothing = 1e-10;

/// KL divergence D(p || q) with additive smoothing on both arguments
/// (each component + eps, renormalized). Call with p = ground truth,
/// q = prediction. Natural log; divide by ln 2 for bits.
double kld(const EmotionDistribution& p, const EmotionDistribution& q,
           double smoothing = kDefaultKldSmoothing);

/// Bhattacharyya coefficient sum_i sqrt(p_i q_i), in [0, 1], symmetric.
double bhattacharyya(const EmotionDistribution& p, const EmotionDistribution& q);

/// Fraction of positions where the class indices agree.
double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Mean absolute difference between paired scores.
double aad(const std::vector<double>& predicted, const std::vector<double>& truth);

/// Per-class true positive rate. Classes absent from truth come back as
/// nullopt and are excluded from any averaging.
std::vector<std::optional<double>> per_class_tpr(const std::vector<int>& predicted,
                                                 const std::vector<int>& truth,
                                                 int num_classes);

struct RecordEval {
  std::string id;
  double kld = 0.0;
  double bc = 0.0;
  int predicted_class = 0;
  int true_class = 0;
};

struct EvaluationReport {
  double accuracy = 0.0;
  double mean_kld = 0.0;
  double mean_bc = 0.0;
  std::vector<RecordEval> records;
  std::optional<double> valence_aad;
  std::optional<double> arousal_aad;
};

/// Distribution-task evaluation: per-record KLD/BC plus dominant-class
/// accuracy, with means over all records.
EvaluationReport evaluate_distributions(const std::vector<std::string>& ids,
                                        const std::vector<EmotionDistribution>& predicted,
                                        const std::vector<EmotionDistribution>& truth,
                                        double smoothing = kDefaultKldSmoothing,
                                        double log_base = 0.0 /* 0 = natural */);

}  // namespace affect
