#include "support/test_data.hpp"

#include <atomic>

namespace affect::test {

namespace {
std::atomic<int> g_tmp_counter{0};
}

TmpDir::TmpDir(const std::string& label) {
  const int n = g_tmp_counter.fetch_add(1);
  path_ = std::filesystem::temp_directory_path() /
          ("affect_" + label + "_" + std::to_string(::getpid()) + "_" + std::to_string(n));
  std::filesystem::create_directories(path_);
}

TmpDir::~TmpDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

Dataset make_separable_hard_dataset(int records, int num_classes, uint64_t seed) {
  Rng rng = Rng::stream(seed, "separable");
  constexpr int kDim = 8;
  Dataset ds;
  ds.name = "separable";
  ds.provenance = "synthetic(" + std::to_string(seed) + ")";
  ds.label_kind = LabelKind::Hard;
  for (FamilyTag tag : kAllFamilies) {
    FamilyData fam;
    fam.tag = tag;
    fam.dimension = kDim;
    for (int c = 0; c < kDim; ++c) fam.column_names.push_back("f" + std::to_string(c));
    fam.values = Matrix(records, kDim);
    ds.families.push_back(std::move(fam));
  }
  for (int i = 0; i < records; ++i) {
    const int cls = i % num_classes;
    ds.ids.push_back("img" + std::to_string(i));
    Label lab;
    lab.hard_class = cls;
    ds.labels.push_back(lab);
    for (auto& fam : ds.families) {
      for (int c = 0; c < kDim; ++c) {
        // Corner pattern per class: high on its own pair of columns.
        const bool hot = (c / 2) == cls;
        const double base = hot ? 0.8 : 0.1;
        fam.values.at(i, c) = std::max(0.0, base + 0.03 * rng.normal());
      }
    }
  }
  ds.validate();
  return ds;
}

EmotionDistribution random_distribution(Rng& rng) {
  const auto v = rng.dirichlet(kNumEmotions, 1.0);
  EmotionDistribution d;
  for (int i = 0; i < kNumEmotions; ++i) d[i] = v[static_cast<size_t>(i)];
  return d;
}

Dataset make_random_distribution_dataset(int records, int dim, uint64_t seed) {
  Rng rng = Rng::stream(seed, "random_ds");
  Dataset ds;
  ds.name = "random";
  ds.provenance = "synthetic(" + std::to_string(seed) + ")";
  ds.label_kind = LabelKind::Distribution;
  FamilyData fam;
  fam.tag = FamilyTag::ImageNet;
  fam.dimension = dim;
  for (int c = 0; c < dim; ++c) fam.column_names.push_back("c" + std::to_string(c));
  fam.values = Matrix(records, dim);
  for (int i = 0; i < records; ++i) {
    ds.ids.push_back("img" + std::to_string(i));
    const auto h = rng.dirichlet(dim, 1.0);
    for (int c = 0; c < dim; ++c) fam.values.at(i, c) = h[static_cast<size_t>(c)];
    Label lab;
    lab.distribution = random_distribution(rng);
    ds.labels.push_back(lab);
  }
  ds.families.push_back(std::move(fam));
  ds.validate();
  return ds;
}

}  // namespace affect::test
