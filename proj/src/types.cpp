#include "affect/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace affect {

const char* family_name(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::Llf: return "llf";
    case FamilyTag::ImageNet: return "imagenet";
    case FamilyTag::Places: return "places";
  }
  return "?";
}

FamilyTag family_from_name(const std::string& name) {
  for (FamilyTag tag : kAllFamilies)
    if (name == family_name(tag)) return tag;
  throw ValidationError("unknown feature family '" + name + "' (expected llf, imagenet or places)");
}

int standard_dimension(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::Llf: return 628;
    case FamilyTag::ImageNet: return 1000;
    case FamilyTag::Places: return 205;
  }
  return 0;
}

const char* label_kind_name(LabelKind kind) {
  switch (kind) {
    case LabelKind::None: return "none";
    case LabelKind::Distribution: return "distribution";
    case LabelKind::Hard: return "hard";
    case LabelKind::Va: return "va";
    case LabelKind::DistributionVa: return "distribution+va";
  }
  return "?";
}

LabelKind label_kind_from_name(const std::string& name) {
  for (LabelKind k : {LabelKind::None, LabelKind::Distribution, LabelKind::Hard,
                      LabelKind::Va, LabelKind::DistributionVa})
    if (name == label_kind_name(k)) return k;
  throw ValidationError("unknown label kind '" + name + "'");
}

double EmotionDistribution::sum() const {
  return stable_sum({probs.data(), probs.size()});
}

int EmotionDistribution::dominant() const {
  int best = 0;
  for (int i = 1; i < kNumEmotions; ++i)
    if (probs[static_cast<size_t>(i)] > probs[static_cast<size_t>(best)]) best = i;
  return best;
}

void EmotionDistribution::validate() const {
  for (int i = 0; i < kNumEmotions; ++i) {
    const double p = probs[static_cast<size_t>(i)];
    if (!std::isfinite(p) || p < 0.0)
      throw ValidationError(std::string("emotion distribution has invalid component for ") +
                            kEmotionNames[static_cast<size_t>(i)]);
  }
  if (std::fabs(sum() - 1.0) > 1e-9)
    throw ValidationError("emotion distribution does not sum to 1");
}

EmotionDistribution EmotionDistribution::uniform() {
  EmotionDistribution d;
  d.probs.fill(1.0 / kNumEmotions);
  return d;
}

Matrix Matrix::select_rows(std::span<const int> indices) const {
  Matrix out(static_cast<int>(indices.size()), cols);
  for (size_t k = 0; k < indices.size(); ++k)
    std::copy_n(row(indices[k]), cols, out.row(static_cast<int>(k)));
  return out;
}

const FamilyData* Dataset::family(FamilyTag tag) const {
  for (const auto& f : families)
    if (f.tag == tag) return &f;
  return nullptr;
}

FamilyData* Dataset::family(FamilyTag tag) {
  for (auto& f : families)
    if (f.tag == tag) return &f;
  return nullptr;
}

FeatureRecord Dataset::record(int i) const {
  FeatureRecord rec;
  rec.id = ids[static_cast<size_t>(i)];
  for (const auto& f : families) {
    const double* r = f.values.row(i);
    rec.features[f.tag] = std::vector<double>(r, r + f.dimension);
  }
  if (!labels.empty()) rec.label = labels[static_cast<size_t>(i)];
  return rec;
}

int Dataset::stratum_of(int i) const {
  const Label& lab = labels[static_cast<size_t>(i)];
  if (lab.distribution) return lab.distribution->dominant();
  if (lab.hard_class) return *lab.hard_class;
  return 0;
}

void Dataset::validate() const {
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw ValidationError("duplicate id '" + id + "'");
  for (const auto& f : families) {
    if (f.values.rows != size())
      throw ValidationError(std::string("family ") + family_name(f.tag) +
                            " row count does not match record count");
    if (f.values.cols != f.dimension)
      throw ValidationError(std::string("family ") + family_name(f.tag) + " dimension mismatch");
    if (f.tag != FamilyTag::Llf) {
      for (double v : f.values.data)
        if (!(v >= 0.0))
          throw ValidationError(std::string("negative or non-finite value in ") +
                                family_name(f.tag) + " features");
    }
  }
  if (label_kind != LabelKind::None) {
    if (labels.size() != ids.size()) throw ValidationError("label count does not match record count");
    for (const auto& lab : labels) {
      if (lab.distribution) lab.distribution->validate();
      if (lab.va && (!std::isfinite(lab.va->valence) || !std::isfinite(lab.va->arousal)))
        throw ValidationError("non-finite valence/arousal value");
      if (lab.hard_class && *lab.hard_class < 0)
        throw ValidationError("negative class index");
    }
  }
}

std::vector<int> class_counts(const Dataset& ds) {
  int num_classes = kNumEmotions;
  if (ds.label_kind == LabelKind::Hard) {
    int max_class = -1;
    for (const auto& lab : ds.labels)
      if (lab.hard_class) max_class = std::max(max_class, *lab.hard_class);
    num_classes = max_class + 1;
  }
  std::vector<int> counts(static_cast<size_t>(std::max(num_classes, 0)), 0);
  for (int i = 0; i < ds.size(); ++i) {
    const Label& lab = ds.labels[static_cast<size_t>(i)];
    if (lab.distribution)
      ++counts[static_cast<size_t>(lab.distribution->dominant())];
    else if (lab.hard_class)
      ++counts[static_cast<size_t>(*lab.hard_class)];
  }
  return counts;
}

double stable_sum(std::span<const double> values) {
  // Neumaier variant of Kahan summation.
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace affect
