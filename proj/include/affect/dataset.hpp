#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "affect/types.hpp"

namespace affect {

/// Keeps the concept columns detected often enough across a dataset.
/// A concept counts as detected in an image when its probability is at
/// least detect_threshold; a column is kept when it is detected in at
/// least frequency_threshold of the rows.
struct ConceptFilter {
  std::vector<int> kept_indices;  // strictly increasing
  double detect_threshold = 0.01;
  double frequency_threshold = 0.10;
};

/// Per-feature min-max normalization fitted on training rows.
struct LlfScaler {
  std::vector<double> min;
  std::vector<double> max;
};

/// Parses the JSON manifest and the CSV files it references. Feature rows
/// are aligned by id across files; labels must cover every id.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes feature CSVs, the label CSV and a manifest.json under dir.
/// Returns the manifest path.
std::filesystem::path save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// v / sum(v). Input must be componentwise nonnegative with positive sum.
std::vector<double> normalize_hlc(std::span<const double> v);

ConceptFilter fit_concept_filter(const Matrix& hlc, double detect_threshold,
                                 double frequency_threshold);

/// Selects the kept components and renormalizes them onto the simplex.
std::vector<double> apply_concept_filter(const ConceptFilter& filter, std::span<const double> v);

LlfScaler fit_llf_scaler(const Matrix& llf);

/// (x - min) / (max - min) per feature; constant features map to 0;
/// out-of-range values clamp to [0, 1].
std::vector<double> apply_llf_scaler(const LlfScaler& scaler, std::span<const double> v);

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::string> warnings;
};

/// Deterministic stratified split on the records' strata (dominant class
/// for distribution labels, class index for hard labels). Classes with a
/// single member go to the training side with a warning.
SplitResult stratified_split(const Dataset& ds, double test_fraction, uint64_t seed);

/// Subset of a dataset by record row indices, preserving order.
Dataset subset_dataset(const Dataset& ds, std::span<const int> rows);

// --- synthetic generators -------------------------------------------------

struct SynthAdmixture {
  Dataset dataset;       // one HLC family of dimension d, distribution labels
  Matrix true_profiles;  // d x 7, ground-truth simplex columns
};

/// Draws 7 ground-truth concept profiles and per-record mixture weights,
/// observes h = P e with optional truncated-at-zero noise, renormalized.
SynthAdmixture synth_admixture(int d, int n, double noise_std, uint64_t seed);

struct SynthHybridInfo {
  std::array<FamilyTag, kNumEmotions> class_family{};  // informative family per class
  std::array<int, kNumEmotions> class_column{};        // carrier column inside that family
  FamilyTag valence_family = FamilyTag::Places;
  int valence_column = 0;
  FamilyTag arousal_family = FamilyTag::ImageNet;
  int arousal_column = 0;
};

struct SynthHybrid {
  Dataset dataset;  // three families, distribution+va labels
  SynthHybridInfo info;
};

/// Each class's probability is carried by one designated column of one
/// designated family (plus small feature noise); the remaining columns are
/// uninformative filler. VA targets are carried the same way.
SynthHybrid synth_hybrid(int records, uint64_t seed, double noise_std = 0.01);

}  // namespace affect
