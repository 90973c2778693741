#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "affect/dataset.hpp"
#include "affect/model_selection.hpp"
#include "affect/svm.hpp"
#include "affect/types.hpp"

namespace affect {

/// Non-empty set of feature families, kept in canonical order
/// LLF -> ImageNet -> Places.
struct FeatureSubset {
  std::vector<FamilyTag> families;

  bool contains(FamilyTag tag) const;
  int family_count() const { return static_cast<int>(families.size()); }
  std::string label() const;  // e.g. "llf+places"

  bool operator==(const FeatureSubset&) const = default;
};

/// The seven non-empty subsets of {LLF, ImageNet, Places}, singletons
/// first, then pairs, then the full set.
const std::array<FeatureSubset, 7>& enumerate_subsets();

/// Preprocessing fitted on training data only: a min-max scaler for LLF and
/// a detection-frequency concept filter per HLC family.
struct Preprocessing {
  std::optional<LlfScaler> llf_scaler;
  std::map<FamilyTag, ConceptFilter> concept_filters;
};

Preprocessing fit_preprocessing(const Dataset& train, double detect_threshold,
                                double frequency_threshold);

/// Concatenates the preprocessed families of the subset in canonical order.
std::vector<double> assemble_features(const FeatureRecord& record, const FeatureSubset& subset,
                                      const Preprocessing& prep);

/// Row-wise assemble_features over a whole dataset.
Matrix assemble_matrix(const Dataset& ds, const FeatureSubset& subset, const Preprocessing& prep);

struct BuildConfig {
  ParamGrid grid = ParamGrid::defaults();
  double epsilon = 0.01;
  uint64_t seed = 0;
  double detect_threshold = 0.01;
  double frequency_threshold = 0.10;
  int cv_folds = 5;
  int threads = 1;
  TrainOptions train;
};

struct HybridClassEntry {
  FeatureSubset subset;
  KernelParams params;
  SvrModel model;
  double training_mse = 0.0;
  bool warning = false;
};

struct HybridEnsemble {
  std::array<HybridClassEntry, kNumEmotions> classes;
  Preprocessing prep;
};

struct SubsetSearchCell {
  bool available = false;  // family missing from the dataset otherwise
  double training_mse = 0.0;
  KernelParams params;
  double cv_score = 0.0;
  bool warning = false;
  std::vector<CvCell> cv_cells;  // full grid detail; not serialized
};

struct HybridBuild {
  HybridEnsemble ensemble;
  // mse_table[c][s]: training MSE of the refit model for class c on subset
  // s (enumeration order); unavailable subsets are NaN.
  std::array<std::array<double, 7>, kNumEmotions> mse_table{};
  std::array<std::array<SubsetSearchCell, 7>, kNumEmotions> cells{};
};

/// Per class: grid search (k-fold CV on the training set) for each feature
/// subset, refit on the full training set, keep the subset with the
/// smallest training MSE (ties: fewer families, then enumeration order).
HybridBuild build_hybrid(const Dataset& train, const BuildConfig& cfg);

/// Clip negatives to zero and renormalize; all-nonpositive raw output maps
/// to the uniform distribution.
EmotionDistribution distribution_from_raw(const std::array<double, kNumEmotions>& raw);

EmotionDistribution predict_distribution(const HybridEnsemble& ens, const FeatureRecord& record);

/// Argmax class of a distribution (ties to the lowest index).
int dominant_class(const EmotionDistribution& dist);

struct VaEntry {
  FeatureSubset subset;
  KernelParams params;
  SvrModel model;
  double training_mse = 0.0;
  bool warning = false;
};

struct VaEnsemble {
  VaEntry valence;
  VaEntry arousal;
  Preprocessing prep;
};

struct VaBuild {
  VaEnsemble ensemble;
  std::array<std::array<double, 7>, 2> mse_table{};  // rows: valence, arousal
  std::array<std::array<SubsetSearchCell, 7>, 2> cells{};
};

/// Same subset-selection procedure as build_hybrid, run independently for
/// the valence and arousal targets. Predictions are raw regressor outputs.
VaBuild build_va(const Dataset& train, const BuildConfig& cfg);

VaPair predict_va(const VaEnsemble& ens, const FeatureRecord& record);

enum class TprStrategy { CvMean, FullTrain };

const char* tpr_strategy_name(TprStrategy s);
TprStrategy tpr_strategy_from_name(const std::string& name);

struct ArtphotoEntry {
  int class_index = 0;
  FeatureSubset subset;
  KernelParams params;
  SvcModel model;
  double selection_score = 0.0;  // average training TPR per the strategy
  bool warning = false;
};

struct ArtphotoEnsemble {
  std::vector<ArtphotoEntry> classes;  // ascending class index, present classes only
  Preprocessing prep;
  TprStrategy strategy = TprStrategy::CvMean;
};

struct ArtphotoBuild {
  ArtphotoEnsemble ensemble;
  std::vector<std::array<double, 7>> score_table;  // per present class
  std::vector<std::array<SubsetSearchCell, 7>> cells;
};

/// Replicates the minority side by cycling through its rows in ascending
/// id order until both sides count the same. Returns balanced row indices.
std::vector<int> balance_one_vs_all(const Dataset& ds, int positive_class);

/// One-vs-all classifier per present class: exact positive/negative balance
/// by replication, grid search maximizing held-out accuracy, subset chosen
/// by the configured training-TPR score.
ArtphotoBuild build_artphoto(const Dataset& train, const BuildConfig& cfg, TprStrategy strategy);

/// Argmax of the per-class decision values (ties to the lowest class).
int predict_artphoto(const ArtphotoEnsemble& ens, const FeatureRecord& record);

}  // namespace affect
