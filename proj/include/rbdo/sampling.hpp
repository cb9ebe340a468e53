#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "rbdo/problem.hpp"

namespace rbdo {

// Deterministic random stream: equal (seed, stream) always reproduces the
// same sequence, distinct stream ids give decorrelated sub-streams so the
// consumers (LHS, MC noise, perturbation, GA, ...) never share draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : gen_(mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1))) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform on [0,1), 53-bit resolution
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Box-Muller; the spare value is cached so draws come in a fixed order
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Fisher-Yates permutation of 0..n-1
  std::vector<int> permutation(int n) {
    std::vector<int> p(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(p[static_cast<size_t>(i)], p[static_cast<size_t>(j)]);
    }
    return p;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Conventional stream ids used across the toolkit.
namespace streams {
constexpr std::uint64_t lhs = 1;
constexpr std::uint64_t mc_noise = 2;
constexpr std::uint64_t perturbation = 3;
constexpr std::uint64_t ga = 4;
constexpr std::uint64_t init_candidates = 5;
constexpr std::uint64_t policy = 6;
constexpr std::uint64_t fallback = 7;
}  // namespace streams

// Latin hypercube over the box: per dimension the n samples occupy the n
// equal-width strata in independently permuted order, jittered uniformly
// inside each stratum.
inline Mat latin_hypercube(const Bounds& bounds, int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("latin_hypercube: n must be >= 1");
  const int k = bounds.dim();
  Mat out(n, k);
  for (int p = 0; p < k; ++p) {
    const auto perm = rng.permutation(n);
    const double lo = bounds.lower()[p];
    const double w = (bounds.upper()[p] - lo) / n;
    for (int i = 0; i < n; ++i)
      out(i, p) = lo + (perm[static_cast<size_t>(i)] + rng.uniform01()) * w;
  }
  return out;
}

// i.i.d. uniform points over the box.
inline Mat uniform_candidates(const Bounds& bounds, int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("uniform_candidates: n must be >= 1");
  const int k = bounds.dim();
  Mat out(n, k);
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < k; ++p) out(i, p) = rng.uniform(bounds.lower()[p], bounds.upper()[p]);
  return out;
}

// Gaussian cloud around a design point. Rows are NOT filtered against any
// bounds; feasibility screening is a separate step.
inline Mat gaussian_cloud(const DesignVector& center, const Vec& sigma_vec, int m,
                          RngStream& rng) {
  if (m < 1) throw std::invalid_argument("gaussian_cloud: m must be >= 1");
  if (sigma_vec.size() != center.values().size())
    throw std::invalid_argument("gaussian_cloud: sigma dimension mismatch");
  for (Eigen::Index p = 0; p < sigma_vec.size(); ++p)
    if (!(sigma_vec[p] > 0)) throw std::invalid_argument("gaussian_cloud: sigma must be > 0");
  const int k = center.dim();
  Mat out(m, k);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) out(i, p) = rng.normal(center[p], sigma_vec[p]);
  return out;
}

}  // namespace rbdo
