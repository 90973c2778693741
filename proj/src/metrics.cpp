#include "affect/metrics.hpp"

#include <cmath>

namespace affect {

double kld(const EmotionDistribution& p, const EmotionDistribution& q, double smoothing) {
  p.validate();
  q.validate();
  if (!(smoothing > 0.0)) throw ValidationError("kld smoothing must be positive");
  const double zp = p.sum() + kNumEmotions * smoothing;
  const double zq = q.sum() + kNumEmotions * smoothing;
  std::array<double, kNumEmotions> terms{};
  for (int i = 0; i < kNumEmotions; ++i) {
    const double pi = (p[i] + smoothing) / zp;
    const double qi = (q[i] + smoothing) / zq;
    terms[static_cast<size_t>(i)] = pi * std::log(pi / qi);
  }
  const double d = stable_sum(terms);
  return d < 0.0 ? 0.0 : d;  // clip rounding noise at identical inputs
}

double bhattacharyya(const EmotionDistribution& p, const EmotionDistribution& q) {
  p.validate();
  q.validate();
  std::array<double, kNumEmotions> terms{};
  for (int i = 0; i < kNumEmotions; ++i)
    terms[static_cast<size_t>(i)] = std::sqrt(p[i] * q[i]);
  return stable_sum(terms);
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw ValidationError("accuracy: length mismatch");
  if (predicted.empty()) throw ValidationError("accuracy: empty input");
  int correct = 0;
  for (size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == truth[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

double aad(const std::vector<double>& predicted, const std::vector<double>& truth) {
  if (predicted.size() != truth.size()) throw ValidationError("aad: length mismatch");
  if (predicted.empty()) throw ValidationError("aad: empty input");
  std::vector<double> diffs(predicted.size());
  for (size_t i = 0; i < predicted.size(); ++i)
    diffs[i] = std::fabs(predicted[i] - truth[i]);
  return stable_sum(diffs) / static_cast<double>(diffs.size());
}

std::vector<std::optional<double>> per_class_tpr(const std::vector<int>& predicted,
                                                 const std::vector<int>& truth,
                                                 int num_classes) {
  if (predicted.size() != truth.size()) throw ValidationError("per_class_tpr: length mismatch");
  std::vector<int> total(static_cast<size_t>(num_classes), 0);
  std::vector<int> correct(static_cast<size_t>(num_classes), 0);
  for (size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    if (t < 0 || t >= num_classes) throw ValidationError("per_class_tpr: class index out of range");
    ++total[static_cast<size_t>(t)];
    if (predicted[i] == t) ++correct[static_cast<size_t>(t)];
  }
  std::vector<std::optional<double>> tpr(static_cast<size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c)
    if (total[static_cast<size_t>(c)] > 0)
      tpr[static_cast<size_t>(c)] =
          static_cast<double>(correct[static_cast<size_t>(c)]) / total[static_cast<size_t>(c)];
  return tpr;
}

EvaluationReport evaluate_distributions(const std::vector<std::string>& ids,
                                        const std::vector<EmotionDistribution>& predicted,
                                        const std::vector<EmotionDistribution>& truth,
                                        double smoothing, double log_base) {
  if (ids.size() != predicted.size() || ids.size() != truth.size())
    throw ValidationError("evaluate_distributions: length mismatch");
  if (ids.empty()) throw ValidationError("evaluate_distributions: empty input");
  const double scale = log_base > 0.0 ? 1.0 / std::log(log_base) : 1.0;
  EvaluationReport report;
  std::vector<int> pred_cls, true_cls;
  std::vector<double> klds, bcs;
  for (size_t i = 0; i < ids.size(); ++i) {
    RecordEval row;
    row.id = ids[i];
    row.kld = kld(truth[i], predicted[i], smoothing) * scale;
    row.bc = bhattacharyya(truth[i], predicted[i]);
    row.predicted_class = predicted[i].dominant();
    row.true_class = truth[i].dominant();
    klds.push_back(row.kld);
    bcs.push_back(row.bc);
    pred_cls.push_back(row.predicted_class);
    true_cls.push_back(row.true_class);
    report.records.push_back(std::move(row));
  }
  report.accuracy = accuracy(pred_cls, true_cls);
  report.mean_kld = stable_sum(klds) / static_cast<double>(klds.size());
  report.mean_bc = stable_sum(bcs) / static_cast<double>(bcs.size());
  return report;
}

}  // namespace affect
