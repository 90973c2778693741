#include "affect/hybrid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "affect/rng.hpp"

namespace affect {

bool FeatureSubset::contains(FamilyTag tag) const {
  return std::find(families.begin(), families.end(), tag) != families.end();
}

std::string FeatureSubset::label() const {
  std::string out;
  for (FamilyTag tag : families) {
    if (!out.empty()) out += '+';
    out += family_name(tag);
  }
  return out;
}

const std::array<FeatureSubset, 7>& enumerate_subsets() {
  static const std::array<FeatureSubset, 7> subsets = {{
      {{FamilyTag::Llf}},
      {{FamilyTag::ImageNet}},
      {{FamilyTag::Places}},
      {{FamilyTag::Llf, FamilyTag::ImageNet}},
      {{FamilyTag::Llf, FamilyTag::Places}},
      {{FamilyTag::ImageNet, FamilyTag::Places}},
      {{FamilyTag::Llf, FamilyTag::ImageNet, FamilyTag::Places}},
  }};
  return subsets;
}

Preprocessing fit_preprocessing(const Dataset& train, double detect_threshold,
                                double frequency_threshold) {
  Preprocessing prep;
  for (const auto& fam : train.families) {
    if (fam.tag == FamilyTag::Llf)
      prep.llf_scaler = fit_llf_scaler(fam.values);
    else
      prep.concept_filters[fam.tag] =
          fit_concept_filter(fam.values, detect_threshold, frequency_threshold);
  }
  return prep;
}

std::vector<double> assemble_features(const FeatureRecord& record, const FeatureSubset& subset,
                                      const Preprocessing& prep) {
  if (subset.families.empty()) throw ValidationError("assemble_features: empty feature subset");
  std::vector<double> out;
  for (FamilyTag tag : kAllFamilies) {  // canonical order regardless of subset listing
    if (!subset.contains(tag)) continue;
    auto it = record.features.find(tag);
    if (it == record.features.end())
      throw ValidationError(std::string("assemble_features: record is missing family ") +
                            family_name(tag));
    std::vector<double> part;
    if (tag == FamilyTag::Llf) {
      if (!prep.llf_scaler) throw ValidationError("assemble_features: LLF scaler not fitted");
      part = apply_llf_scaler(*prep.llf_scaler, it->second);
    } else {
      auto fit = prep.concept_filters.find(tag);
      if (fit == prep.concept_filters.end())
        throw ValidationError(std::string("assemble_features: no concept filter for ") +
                              family_name(tag));
      part = apply_concept_filter(fit->second, it->second);
    }
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

Matrix assemble_matrix(const Dataset& ds, const FeatureSubset& subset, const Preprocessing& prep) {
  if (ds.size() == 0) throw ValidationError("assemble_matrix: empty dataset");
  const auto first = assemble_features(ds.record(0), subset, prep);
  Matrix out(ds.size(), static_cast<int>(first.size()));
  std::copy(first.begin(), first.end(), out.row(0));
  for (int i = 1; i < ds.size(); ++i) {
    const auto row = assemble_features(ds.record(i), subset, prep);
    if (static_cast<int>(row.size()) != out.cols)
      throw ValidationError("assemble_matrix: inconsistent assembled dimension");
    std::copy(row.begin(), row.end(), out.row(i));
  }
  return out;
}

namespace {

bool subset_available(const FeatureSubset& subset, const Dataset& ds) {
  for (FamilyTag tag : subset.families)
    if (ds.family(tag) == nullptr) return false;
  return true;
}

void run_jobs(int n_jobs, int threads, const std::function<void(int)>& job) {
  const int workers = std::max(1, std::min(threads, n_jobs));
  if (workers == 1) {
    for (int i = 0; i < n_jobs; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n_jobs) return;
        job(i);
      }
    });
  for (auto& t : pool) t.join();
}

/// Index of the best cell in one table row: smallest value wins, ties go to
/// the earlier subset (the enumeration is ordered by family count).
int select_min_cell(const std::array<SubsetSearchCell, 7>& row,
                    const std::array<double, 7>& values) {
  int best = -1;
  for (int s = 0; s < 7; ++s) {
    if (!row[static_cast<size_t>(s)].available) continue;
    if (best < 0 || values[static_cast<size_t>(s)] < values[static_cast<size_t>(best)]) best = s;
  }
  if (best < 0) throw ValidationError("no feature subset is available for this dataset");
  return best;
}

struct SvrSearchOutput {
  SubsetSearchCell cell;
  SvrModel model;
};

SvrSearchOutput search_subset_svr(const Matrix& x, const std::vector<double>& y,
                                  const BuildConfig& cfg,
                                  const std::vector<std::vector<int>>& folds) {
  SvrSearchOutput out;
  CvResult cv = grid_search_svr(x, y, cfg.grid, folds, cfg.epsilon, cfg.train);
  const auto fit = train_svr(x, y, cv.best_params, cfg.train);
  out.cell.available = true;
  out.cell.params = cv.best_params;
  out.cell.cv_score = cv.best_score;
  out.cell.training_mse = training_mse(fit.model, x, y);
  out.cell.warning = cv.any_warning || !fit.report.converged;
  out.cell.cv_cells = std::move(cv.cells);
  out.model = fit.model;
  return out;
}

}  // namespace

HybridBuild build_hybrid(const Dataset& train, const BuildConfig& cfg) {
  if (train.label_kind != LabelKind::Distribution && train.label_kind != LabelKind::DistributionVa)
    throw ValidationError("build_hybrid: training data needs distribution labels");
  if (train.size() < cfg.cv_folds)
    throw ValidationError("build_hybrid: fewer records than CV folds");

  HybridBuild build;
  build.ensemble.prep = fit_preprocessing(train, cfg.detect_threshold, cfg.frequency_threshold);
  const auto& subsets = enumerate_subsets();

  std::array<Matrix, 7> x_by_subset;
  std::array<bool, 7> available{};
  for (int s = 0; s < 7; ++s) {
    available[static_cast<size_t>(s)] = subset_available(subsets[static_cast<size_t>(s)], train);
    if (available[static_cast<size_t>(s)])
      x_by_subset[static_cast<size_t>(s)] =
          assemble_matrix(train, subsets[static_cast<size_t>(s)], build.ensemble.prep);
  }

  std::vector<int> strata(static_cast<size_t>(train.size()));
  for (int i = 0; i < train.size(); ++i) strata[static_cast<size_t>(i)] = train.stratum_of(i);
  const auto folds = kfold_indices(train.size(), cfg.cv_folds, &strata,
                                   derive_seed(cfg.seed, "hybrid_folds"));

  std::array<std::vector<double>, kNumEmotions> targets;
  for (int c = 0; c < kNumEmotions; ++c) {
    targets[static_cast<size_t>(c)].resize(static_cast<size_t>(train.size()));
    for (int i = 0; i < train.size(); ++i)
      targets[static_cast<size_t>(c)][static_cast<size_t>(i)] =
          (*train.labels[static_cast<size_t>(i)].distribution)[c];
  }

  std::array<std::array<SvrModel, 7>, kNumEmotions> models;
  run_jobs(kNumEmotions * 7, cfg.threads, [&](int jobid) {
    const int c = jobid / 7;
    const int s = jobid % 7;
    auto& cell = build.cells[static_cast<size_t>(c)][static_cast<size_t>(s)];
    if (!available[static_cast<size_t>(s)]) {
      cell.available = false;
      build.mse_table[static_cast<size_t>(c)][static_cast<size_t>(s)] =
          std::numeric_limits<double>::quiet_NaN();
      return;
    }
    auto out = search_subset_svr(x_by_subset[static_cast<size_t>(s)],
                                 targets[static_cast<size_t>(c)], cfg, folds);
    cell = out.cell;
    build.mse_table[static_cast<size_t>(c)][static_cast<size_t>(s)] = out.cell.training_mse;
    models[static_cast<size_t>(c)][static_cast<size_t>(s)] = std::move(out.model);
  });

  for (int c = 0; c < kNumEmotions; ++c) {
    const int s = select_min_cell(build.cells[static_cast<size_t>(c)],
                                  build.mse_table[static_cast<size_t>(c)]);
    auto& entry = build.ensemble.classes[static_cast<size_t>(c)];
    entry.subset = subsets[static_cast<size_t>(s)];
    entry.params = build.cells[static_cast<size_t>(c)][static_cast<size_t>(s)].params;
    entry.model = std::move(models[static_cast<size_t>(c)][static_cast<size_t>(s)]);
    entry.training_mse = build.mse_table[static_cast<size_t>(c)][static_cast<size_t>(s)];
    entry.warning = build.cells[static_cast<size_t>(c)][static_cast<size_t>(s)].warning;
  }
  return build;
}

EmotionDistribution distribution_from_raw(const std::array<double, kNumEmotions>& raw) {
  EmotionDistribution dist;
  std::array<double, kNumEmotions> clipped{};
  for (int i = 0; i < kNumEmotions; ++i) {
    const double v = raw[static_cast<size_t>(i)];
    if (std::isnan(v)) throw ValidationError("distribution_from_raw: NaN regressor output");
    clipped[static_cast<size_t>(i)] = std::max(v, 0.0);
  }
  const double total = stable_sum({clipped.data(), clipped.size()});
  if (!(total > 0.0) || !std::isfinite(total)) return EmotionDistribution::uniform();
  for (int i = 0; i < kNumEmotions; ++i) dist[i] = clipped[static_cast<size_t>(i)] / total;
  return dist;
}

EmotionDistribution predict_distribution(const HybridEnsemble& ens, const FeatureRecord& record) {
  std::array<double, kNumEmotions> raw{};
  for (int c = 0; c < kNumEmotions; ++c) {
    const auto& entry = ens.classes[static_cast<size_t>(c)];
    raw[static_cast<size_t>(c)] =
        predict_svr(entry.model, assemble_features(record, entry.subset, ens.prep));
  }
  return distribution_from_raw(raw);
}

int dominant_class(const EmotionDistribution& dist) { return dist.dominant(); }

VaBuild build_va(const Dataset& train, const BuildConfig& cfg) {
  if (train.label_kind != LabelKind::Va && train.label_kind != LabelKind::DistributionVa)
    throw ValidationError("build_va: training data needs valence/arousal labels");
  if (train.size() < cfg.cv_folds) throw ValidationError("build_va: fewer records than CV folds");

  VaBuild build;
  build.ensemble.prep = fit_preprocessing(train, cfg.detect_threshold, cfg.frequency_threshold);
  const auto& subsets = enumerate_subsets();

  std::array<Matrix, 7> x_by_subset;
  std::array<bool, 7> available{};
  for (int s = 0; s < 7; ++s) {
    available[static_cast<size_t>(s)] = subset_available(subsets[static_cast<size_t>(s)], train);
    if (available[static_cast<size_t>(s)])
      x_by_subset[static_cast<size_t>(s)] =
          assemble_matrix(train, subsets[static_cast<size_t>(s)], build.ensemble.prep);
  }

  std::vector<int> strata(static_cast<size_t>(train.size()));
  for (int i = 0; i < train.size(); ++i) strata[static_cast<size_t>(i)] = train.stratum_of(i);
  const auto folds =
      kfold_indices(train.size(), cfg.cv_folds, &strata, derive_seed(cfg.seed, "va_folds"));

  std::array<std::vector<double>, 2> targets;
  targets[0].resize(static_cast<size_t>(train.size()));
  targets[1].resize(static_cast<size_t>(train.size()));
  for (int i = 0; i < train.size(); ++i) {
    targets[0][static_cast<size_t>(i)] = train.labels[static_cast<size_t>(i)].va->valence;
    targets[1][static_cast<size_t>(i)] = train.labels[static_cast<size_t>(i)].va->arousal;
  }

  std::array<std::array<SvrModel, 7>, 2> models;
  run_jobs(2 * 7, cfg.threads, [&](int jobid) {
    const int t = jobid / 7;
    const int s = jobid % 7;
    auto& cell = build.cells[static_cast<size_t>(t)][static_cast<size_t>(s)];
    if (!available[static_cast<size_t>(s)]) {
      cell.available = false;
      build.mse_table[static_cast<size_t>(t)][static_cast<size_t>(s)] =
          std::numeric_limits<double>::quiet_NaN();
      return;
    }
    auto out = search_subset_svr(x_by_subset[static_cast<size_t>(s)],
                                 targets[static_cast<size_t>(t)], cfg, folds);
    cell = out.cell;
    build.mse_table[static_cast<size_t>(t)][static_cast<size_t>(s)] = out.cell.training_mse;
    models[static_cast<size_t>(t)][static_cast<size_t>(s)] = std::move(out.model);
  });

  for (int t = 0; t < 2; ++t) {
    const int s = select_min_cell(build.cells[static_cast<size_t>(t)],
                                  build.mse_table[static_cast<size_t>(t)]);
    VaEntry& entry = t == 0 ? build.ensemble.valence : build.ensemble.arousal;
    entry.subset = enumerate_subsets()[static_cast<size_t>(s)];
    entry.params = build.cells[static_cast<size_t>(t)][static_cast<size_t>(s)].params;
    entry.model = std::move(models[static_cast<size_t>(t)][static_cast<size_t>(s)]);
    entry.training_mse = build.mse_table[static_cast<size_t>(t)][static_cast<size_t>(s)];
    entry.warning = build.cells[static_cast<size_t>(t)][static_cast<size_t>(s)].warning;
  }
  return build;
}

VaPair predict_va(const VaEnsemble& ens, const FeatureRecord& record) {
  VaPair out;
  out.valence =
      predict_svr(ens.valence.model, assemble_features(record, ens.valence.subset, ens.prep));
  out.arousal =
      predict_svr(ens.arousal.model, assemble_features(record, ens.arousal.subset, ens.prep));
  return out;
}

const char* tpr_strategy_name(TprStrategy s) {
  return s == TprStrategy::CvMean ? "cv_mean" : "full_train";
}

TprStrategy tpr_strategy_from_name(const std::string& name) {
  if (name == "cv_mean") return TprStrategy::CvMean;
  if (name == "full_train") return TprStrategy::FullTrain;
  throw ValidationError("unknown TPR strategy '" + name + "' (expected cv_mean or full_train)");
}

std::vector<int> balance_one_vs_all(const Dataset& ds, int positive_class) {
  if (ds.label_kind != LabelKind::Hard)
    throw ValidationError("balance_one_vs_all: dataset needs hard labels");
  std::vector<int> pos, neg;
  for (int i = 0; i < ds.size(); ++i)
    (*ds.labels[static_cast<size_t>(i)].hard_class == positive_class ? pos : neg).push_back(i);
  if (pos.empty())
    throw ValidationError("balance_one_vs_all: class " + std::to_string(positive_class) +
                          " absent from training data");
  if (neg.empty()) throw ValidationError("balance_one_vs_all: no negative examples");

  auto by_id = [&ds](int a, int b) { return ds.ids[static_cast<size_t>(a)] < ds.ids[static_cast<size_t>(b)]; };
  std::vector<int> rows = pos;
  rows.insert(rows.end(), neg.begin(), neg.end());
  // Cycle the minority side in ascending id order until the counts match.
  std::vector<int>& minority = pos.size() < neg.size() ? pos : neg;
  const size_t want = std::max(pos.size(), neg.size());
  std::sort(minority.begin(), minority.end(), by_id);
  size_t cursor = 0;
  for (size_t have = minority.size(); have < want; ++have) {
    rows.push_back(minority[cursor]);
    cursor = (cursor + 1) % minority.size();
  }
  return rows;
}

ArtphotoBuild build_artphoto(const Dataset& train, const BuildConfig& cfg, TprStrategy strategy) {
  if (train.label_kind != LabelKind::Hard)
    throw ValidationError("build_artphoto: training data needs hard class labels");

  std::vector<int> present;
  for (int i = 0; i < train.size(); ++i) present.push_back(*train.labels[static_cast<size_t>(i)].hard_class);
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  if (present.size() < 2) throw ValidationError("build_artphoto: need at least 2 classes");

  ArtphotoBuild build;
  build.ensemble.strategy = strategy;
  build.ensemble.prep = fit_preprocessing(train, cfg.detect_threshold, cfg.frequency_threshold);
  const auto& subsets = enumerate_subsets();

  std::array<Matrix, 7> x_by_subset;
  std::array<bool, 7> available{};
  for (int s = 0; s < 7; ++s) {
    available[static_cast<size_t>(s)] = subset_available(subsets[static_cast<size_t>(s)], train);
    if (available[static_cast<size_t>(s)])
      x_by_subset[static_cast<size_t>(s)] =
          assemble_matrix(train, subsets[static_cast<size_t>(s)], build.ensemble.prep);
  }

  const int n_classes = static_cast<int>(present.size());
  build.score_table.resize(static_cast<size_t>(n_classes));
  build.cells.resize(static_cast<size_t>(n_classes));

  struct ClassSetup {
    std::vector<int> rows;  // balanced row indices into train
    std::vector<int> y;     // +/-1 aligned with rows
    std::vector<std::vector<int>> folds;
  };
  std::vector<ClassSetup> setups(static_cast<size_t>(n_classes));
  for (int ci = 0; ci < n_classes; ++ci) {
    const int cls = present[static_cast<size_t>(ci)];
    ClassSetup& setup = setups[static_cast<size_t>(ci)];
    setup.rows = balance_one_vs_all(train, cls);
    setup.y.reserve(setup.rows.size());
    for (int r : setup.rows)
      setup.y.push_back(*train.labels[static_cast<size_t>(r)].hard_class == cls ? 1 : -1);
    setup.folds = kfold_indices(static_cast<int>(setup.rows.size()), cfg.cv_folds, &setup.y,
                                derive_seed(cfg.seed, "artphoto_folds_" + std::to_string(cls)));
  }

  std::vector<std::array<SvcModel, 7>> models(static_cast<size_t>(n_classes));
  run_jobs(n_classes * 7, cfg.threads, [&](int jobid) {
    const int ci = jobid / 7;
    const int s = jobid % 7;
    auto& cell = build.cells[static_cast<size_t>(ci)][static_cast<size_t>(s)];
    if (!available[static_cast<size_t>(s)]) {
      cell.available = false;
      build.score_table[static_cast<size_t>(ci)][static_cast<size_t>(s)] =
          std::numeric_limits<double>::quiet_NaN();
      return;
    }
    const ClassSetup& setup = setups[static_cast<size_t>(ci)];
    const Matrix xb = x_by_subset[static_cast<size_t>(s)].select_rows(setup.rows);
    CvResult cv = grid_search_svc(xb, setup.y, cfg.grid, setup.folds, cfg.train);
    cell.available = true;
    cell.params = cv.best_params;
    cell.cv_score = cv.best_score;
    cell.warning = cv.any_warning;
    cell.cv_cells = std::move(cv.cells);

    double score = 0.0;
    if (strategy == TprStrategy::CvMean) {
      // Mean training TPR over the fold-training runs at the chosen params.
      std::vector<double> fold_tpr;
      for (const auto& fold : setup.folds) {
        std::vector<bool> held(setup.rows.size(), false);
        for (int idx : fold) held[static_cast<size_t>(idx)] = true;
        std::vector<int> tr;
        for (size_t i = 0; i < setup.rows.size(); ++i)
          if (!held[i]) tr.push_back(static_cast<int>(i));
        const Matrix xtr = xb.select_rows(tr);
        std::vector<int> ytr;
        for (int i : tr) ytr.push_back(setup.y[static_cast<size_t>(i)]);
        const auto fit = train_svc(xtr, ytr, cv.best_params, cfg.train);
        cell.warning = cell.warning || !fit.report.converged;
        fold_tpr.push_back(training_tpr(fit.model, xtr, ytr));
      }
      score = stable_sum(fold_tpr) / static_cast<double>(fold_tpr.size());
    }
    const auto full = train_svc(xb, setup.y, cv.best_params, cfg.train);
    cell.warning = cell.warning || !full.report.converged;
    if (strategy == TprStrategy::FullTrain) score = training_tpr(full.model, xb, setup.y);
    build.score_table[static_cast<size_t>(ci)][static_cast<size_t>(s)] = score;
    models[static_cast<size_t>(ci)][static_cast<size_t>(s)] = full.model;
  });

  for (int ci = 0; ci < n_classes; ++ci) {
    int best = -1;
    for (int s = 0; s < 7; ++s) {
      if (!build.cells[static_cast<size_t>(ci)][static_cast<size_t>(s)].available) continue;
      if (best < 0 || build.score_table[static_cast<size_t>(ci)][static_cast<size_t>(s)] >
                          build.score_table[static_cast<size_t>(ci)][static_cast<size_t>(best)])
        best = s;
    }
    if (best < 0) throw ValidationError("no feature subset is available for this dataset");
    ArtphotoEntry entry;
    entry.class_index = present[static_cast<size_t>(ci)];
    entry.subset = subsets[static_cast<size_t>(best)];
    entry.params = build.cells[static_cast<size_t>(ci)][static_cast<size_t>(best)].params;
    entry.model = std::move(models[static_cast<size_t>(ci)][static_cast<size_t>(best)]);
    entry.selection_score = build.score_table[static_cast<size_t>(ci)][static_cast<size_t>(best)];
    entry.warning = build.cells[static_cast<size_t>(ci)][static_cast<size_t>(best)].warning;
    build.ensemble.classes.push_back(std::move(entry));
  }
  return build;
}

int predict_artphoto(const ArtphotoEnsemble& ens, const FeatureRecord& record) {
  if (ens.classes.empty()) throw ValidationError("predict_artphoto: empty ensemble");
  int best_class = ens.classes.front().class_index;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& entry : ens.classes) {
    const double value =
        predict_svc(entry.model, assemble_features(record, entry.subset, ens.prep)).decision_value;
    if (value > best_value) {  // strict: ties keep the lowest class index
      best_value = value;
      best_class = entry.class_index;
    }
  }
  return best_class;
}

}  // namespace affect
