#include "affect/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "affect/rng.hpp"

namespace affect {

void ParamGrid::validate() const {
  auto check = [](const std::vector<double>& v, const char* what) {
    if (v.empty()) throw ValidationError(std::string("grid has no ") + what + " values");
    double prev = 0.0;
    for (double x : v) {
      if (!(x > 0.0)) throw ValidationError(std::string("grid ") + what + " values must be positive");
      if (x <= prev) throw ValidationError(std::string("grid ") + what + " values must be strictly ascending");
      prev = x;
    }
  };
  check(c_values, "C");
  check(gamma_values, "gamma");
}

ParamGrid ParamGrid::defaults() {
  ParamGrid g;
  for (int e = -5; e <= 15; e += 2) g.c_values.push_back(std::ldexp(1.0, e));
  for (int e = -15; e <= 3; e += 2) g.gamma_values.push_back(std::ldexp(1.0, e));
  return g;
}

std::vector<std::vector<int>> kfold_indices(int n, int k, const std::vector<int>* strata,
                                            uint64_t seed) {
  if (k < 2 || k > n) throw ValidationError("kfold_indices: need 2 <= k <= n");
  if (strata != nullptr && static_cast<int>(strata->size()) != n)
    throw ValidationError("kfold_indices: strata length mismatch");

  std::map<int, std::vector<int>> groups;
  if (strata != nullptr) {
    for (int i = 0; i < n; ++i) groups[(*strata)[static_cast<size_t>(i)]].push_back(i);
  } else {
    for (int i = 0; i < n; ++i) groups[0].push_back(i);
  }

  Rng rng = Rng::stream(seed, "folds");
  std::vector<std::vector<int>> folds(static_cast<size_t>(k));
  // A fold cursor that carries over between strata keeps the global fold
  // sizes within one of each other, not just the per-class counts.
  int cursor = 0;
  for (auto& [cls, members] : groups) {
    rng.shuffle(members);
    for (int idx : members) {
      folds[static_cast<size_t>(cursor)].push_back(idx);
      cursor = (cursor + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

struct FoldViews {
  std::vector<std::vector<int>> train_rows;  // complement of each fold
};

FoldViews complement_folds(int n, const std::vector<std::vector<int>>& folds) {
  FoldViews views;
  for (const auto& fold : folds) {
    std::vector<bool> held(static_cast<size_t>(n), false);
    for (int idx : fold) {
      if (idx < 0 || idx >= n) throw ValidationError("grid search: fold index out of range");
      held[static_cast<size_t>(idx)] = true;
    }
    std::vector<int> train;
    train.reserve(static_cast<size_t>(n) - fold.size());
    for (int i = 0; i < n; ++i)
      if (!held[static_cast<size_t>(i)]) train.push_back(i);
    if (train.empty()) throw ValidationError("grid search: a fold holds out every row");
    views.train_rows.push_back(std::move(train));
  }
  return views;
}

template <typename T>
std::vector<T> select(const std::vector<T>& v, const std::vector<int>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(v[static_cast<size_t>(r)]);
  return out;
}

}  // namespace

CvResult grid_search_svr(const Matrix& x, const std::vector<double>& y, const ParamGrid& grid,
                         const std::vector<std::vector<int>>& folds, double epsilon,
                         const TrainOptions& opts) {
  grid.validate();
  if (static_cast<int>(y.size()) != x.rows) throw ValidationError("grid_search_svr: target length mismatch");
  if (folds.empty()) throw ValidationError("grid_search_svr: no folds");
  const FoldViews views = complement_folds(x.rows, folds);

  CvResult result;
  bool have_best = false;
  for (double c : grid.c_values) {
    for (double gamma : grid.gamma_values) {
      CvCell cell;
      cell.c = c;
      cell.gamma = gamma;
      KernelParams params{gamma, c, epsilon};
      for (size_t f = 0; f < folds.size(); ++f) {
        const Matrix xtr = x.select_rows(views.train_rows[f]);
        const auto ytr = select(y, views.train_rows[f]);
        const auto fit = train_svr(xtr, ytr, params, opts);
        cell.warning = cell.warning || !fit.report.converged;
        std::vector<double> sq(folds[f].size());
        for (size_t v = 0; v < folds[f].size(); ++v) {
          const double err = predict_svr(fit.model, x.row_span(folds[f][v])) -
                             y[static_cast<size_t>(folds[f][v])];
          sq[v] = err * err;
        }
        cell.fold_scores.push_back(folds[f].empty() ? 0.0
                                                    : stable_sum(sq) / static_cast<double>(sq.size()));
      }
      cell.mean_score = stable_sum(cell.fold_scores) / static_cast<double>(cell.fold_scores.size());
      result.any_warning = result.any_warning || cell.warning;
      // Strictly-better comparison with ascending cell order implements the
      // tie-break: smaller C, then smaller gamma.
      if (!have_best || cell.mean_score < result.best_score) {
        result.best_score = cell.mean_score;
        result.best_params = params;
        have_best = true;
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

CvResult grid_search_svc(const Matrix& x, const std::vector<int>& y, const ParamGrid& grid,
                         const std::vector<std::vector<int>>& folds, const TrainOptions& opts) {
  grid.validate();
  if (static_cast<int>(y.size()) != x.rows) throw ValidationError("grid_search_svc: label length mismatch");
  if (folds.empty()) throw ValidationError("grid_search_svc: no folds");
  const FoldViews views = complement_folds(x.rows, folds);

  CvResult result;
  bool have_best = false;
  for (double c : grid.c_values) {
    for (double gamma : grid.gamma_values) {
      CvCell cell;
      cell.c = c;
      cell.gamma = gamma;
      KernelParams params{gamma, c, 0.0};
      for (size_t f = 0; f < folds.size(); ++f) {
        const Matrix xtr = x.select_rows(views.train_rows[f]);
        const auto ytr = select(y, views.train_rows[f]);
        const auto fit = train_svc(xtr, ytr, params, opts);
        cell.warning = cell.warning || !fit.report.converged;
        int correct = 0;
        for (int v : folds[f])
          if (predict_svc(fit.model, x.row_span(v)).label == y[static_cast<size_t>(v)]) ++correct;
        cell.fold_scores.push_back(folds[f].empty()
                                       ? 0.0
                                       : static_cast<double>(correct) / static_cast<double>(folds[f].size()));
      }
      cell.mean_score = stable_sum(cell.fold_scores) / static_cast<double>(cell.fold_scores.size());
      result.any_warning = result.any_warning || cell.warning;
      if (!have_best || cell.mean_score > result.best_score) {
        result.best_score = cell.mean_score;
        result.best_params = params;
        have_best = true;
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

double training_mse(const SvrModel& model, const Matrix& x, const std::vector<double>& y) {
  if (x.rows == 0) throw ValidationError("training_mse: empty input");
  if (static_cast<int>(y.size()) != x.rows) throw ValidationError("training_mse: length mismatch");
  std::vector<double> sq(static_cast<size_t>(x.rows));
  for (int i = 0; i < x.rows; ++i) {
    const double err = predict_svr(model, x.row_span(i)) - y[static_cast<size_t>(i)];
    sq[static_cast<size_t>(i)] = err * err;
  }
  return stable_sum(sq) / static_cast<double>(x.rows);
}

double training_tpr(const SvcModel& model, const Matrix& x, const std::vector<int>& y) {
  if (static_cast<int>(y.size()) != x.rows) throw ValidationError("training_tpr: length mismatch");
  int positives = 0, correct = 0;
  for (int i = 0; i < x.rows; ++i) {
    if (y[static_cast<size_t>(i)] != 1) continue;
    ++positives;
    if (predict_svc(model, x.row_span(i)).label == 1) ++correct;
  }
  if (positives == 0) throw ValidationError("training_tpr: no positive examples");
  return static_cast<double>(correct) / positives;
}

}  // namespace affect
