#pragma once

#include <cstddef>
#include <list>
#include <span>
#include <unordered_map>
#include <vector>

#include "affect/types.hpp"

namespace affect {

struct KernelParams {
  double gamma = 1.0;    // RBF width
  double c = 1.0;        // box constraint
  double epsilon = 0.01; // regression tube (SVR only)

  void validate(bool for_svr) const;
};

/// k(x, y) = exp(-gamma * ||x - y||^2). gamma may be zero (constant kernel).
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// RBF rows of a training matrix, computed on demand and kept in an LRU
/// cache. Row i is K(x_i, x_0..n-1).
class KernelCache {
 public:
  /// max_rows = 0 caches every row.
  KernelCache(const Matrix& x, double gamma, size_t max_rows = 0);

  const std::vector<double>& row(int i);
  int size() const { return x_.rows; }
  long long evaluations() const { return evaluations_; }

 private:
  const Matrix& x_;
  double gamma_;
  size_t max_rows_;
  std::vector<double> sq_norms_;
  std::list<std::pair<int, std::vector<double>>> lru_;  // front = most recent
  std::unordered_map<int, std::list<std::pair<int, std::vector<double>>>::iterator> index_;
  long long evaluations_ = 0;
};

}  // namespace affect
