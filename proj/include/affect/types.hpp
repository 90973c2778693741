#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace affect {

/// Thrown on invalid inputs: malformed files, contract violations, bad
/// parameters. The CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kNumEmotions = 7;

/// Class order used everywhere (labels, reports, serialized vectors).
inline constexpr std::array<const char*, kNumEmotions> kEmotionNames = {
    "anger", "disgust", "fear", "joy", "sadness", "surprise", "neutral"};

enum class FamilyTag { Llf, ImageNet, Places };

inline constexpr std::array<FamilyTag, 3> kAllFamilies = {
    FamilyTag::Llf, FamilyTag::ImageNet, FamilyTag::Places};

const char* family_name(FamilyTag tag);
FamilyTag family_from_name(const std::string& name);

/// Conventional dimensions: 628 (low-level), 1000 (object concepts),
/// 205 (place concepts). Datasets may declare other dimensions.
int standard_dimension(FamilyTag tag);

/// A probability vector over the seven emotion classes.
struct EmotionDistribution {
  std::array<double, kNumEmotions> probs{};

  double& operator[](int i) { return probs[static_cast<size_t>(i)]; }
  double operator[](int i) const { return probs[static_cast<size_t>(i)]; }

  double sum() const;
  /// Index of the largest component; ties go to the lowest index.
  int dominant() const;
  /// Components >= 0 and sum within 1e-9 of one.
  void validate() const;

  static EmotionDistribution uniform();
};

struct VaPair {
  double valence = 0.0;
  double arousal = 0.0;
};

enum class LabelKind { None, Distribution, Hard, Va, DistributionVa };

const char* label_kind_name(LabelKind kind);
LabelKind label_kind_from_name(const std::string& name);

struct Label {
  std::optional<EmotionDistribution> distribution;
  std::optional<VaPair> va;
  std::optional<int> hard_class;
};

/// Dense row-major matrix; rows are records.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
  std::span<const double> row_span(int i) const { return {row(i), static_cast<size_t>(cols)}; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  /// New matrix holding the given rows, in the given order.
  Matrix select_rows(std::span<const int> indices) const;
};

struct FeatureRecord {
  std::string id;
  std::map<FamilyTag, std::vector<double>> features;
  Label label;
};

struct FamilyData {
  FamilyTag tag = FamilyTag::Llf;
  int dimension = 0;
  std::vector<std::string> column_names;  // one per feature column
  Matrix values;                          // n x dimension
};

struct Dataset {
  std::string name;
  std::string provenance;  // manifest path or "synthetic(seed)"
  LabelKind label_kind = LabelKind::None;
  std::vector<std::string> ids;
  std::vector<FamilyData> families;
  std::vector<Label> labels;  // one per record (empty Label when kind is None)

  int size() const { return static_cast<int>(ids.size()); }
  const FamilyData* family(FamilyTag tag) const;
  FamilyData* family(FamilyTag tag);
  FeatureRecord record(int i) const;

  /// Stratification key: dominant class for distribution labels, the class
  /// index for hard labels, 0 otherwise (VA-only data forms one stratum).
  int stratum_of(int i) const;

  /// Unique ids, aligned family row counts, label invariants.
  void validate() const;
};

/// Records per class: argmax-reduced for distribution labels, direct for
/// hard labels. Vector length = kNumEmotions or max class index + 1.
std::vector<int> class_counts(const Dataset& ds);

/// Numerically careful sum (Neumaier compensation); also the fixed-order
/// reduction used wherever determinism across thread counts is required.
double stable_sum(std::span<const double> values);

std::string fmt_double(double v);  // shortest round-trip decimal form

}  // namespace affect
