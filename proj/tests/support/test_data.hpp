#pragma once

#include <filesystem>
#include <string>

#include "affect/dataset.hpp"
#include "affect/rng.hpp"
#include "affect/types.hpp"

namespace affect::test {

/// Unique scratch directory removed on destruction.
class TmpDir {
 public:
  explicit TmpDir(const std::string& label);
  ~TmpDir();
  TmpDir(const TmpDir&) = delete;
  TmpDir& operator=(const TmpDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Well-separated classes: per class, every family carries the same noisy
/// corner pattern, so any subset separates. Hard labels.
Dataset make_separable_hard_dataset(int records, int num_classes, uint64_t seed);

/// Random point on the (k-1)-simplex.
EmotionDistribution random_distribution(Rng& rng);

/// Small dataset with one HLC family and distribution labels, random data.
Dataset make_random_distribution_dataset(int records, int dim, uint64_t seed);

}  // namespace affect::test
