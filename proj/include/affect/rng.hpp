#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace affect {

/// Deterministic random source. All sampling goes through explicit
/// algorithms here rather than std distributions, so a (seed, stream name)
/// pair reproduces the same values on any platform. Named sub-streams keep
/// the split / fold / synthesis draws independent of each other.
/// Maps a top-level seed plus a stream name to an independent seed
/// (FNV-1a over the name, xored in).
inline uint64_t derive_seed(uint64_t seed, std::string_view name) {
  uint64_t h = 1469598103934665603ull;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return seed ^ h;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(mix(seed)) {}

  static Rng stream(uint64_t seed, std::string_view name) {
    return Rng(derive_seed(seed, name));
  }

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  int uniform_int(int n) {
    // Rejection sampling on the top bits keeps the draw unbiased.
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  /// Standard normal via Box-Muller (pairs, one cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double exponential() {
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    return -std::log(u);
  }

  /// Gamma(alpha, 1) for alpha >= 1 (Marsaglia-Tsang squeeze).
  double gamma(double alpha) {
    if (alpha == 1.0) return exponential();
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Symmetric Dirichlet draw on the (k-1)-simplex.
  std::vector<double> dirichlet(int k, double alpha) {
    std::vector<double> v(static_cast<size_t>(k));
    double total = 0.0;
    for (auto& x : v) {
      x = gamma(alpha);
      total += x;
    }
    for (auto& x : v) x /= total;
    return v;
  }

  /// Fisher-Yates shuffle with this engine (std::shuffle's draw order is
  /// implementation-defined; this one is pinned).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      const int j = uniform_int(i + 1);
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
    }
  }

 private:
  static uint64_t mix(uint64_t x) {
    // splitmix64 finalizer; decorrelates nearby seeds.
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace affect
