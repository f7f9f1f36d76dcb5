#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include "tglm/error.hpp"
#include "tglm/numarray.hpp"

namespace tglm {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seeded random stream. One root seed fans out to named sub-streams
// (init / dropout / sampler / data-order) so toggling one consumer does not
// perturb the draws seen by the others. All transforms are written out by
// hand on top of the standard mt19937_64 engine, which keeps the draw
// sequences identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  // Derived stream: same root seed + same name => same sequence.
  Rng stream(std::string_view name) const {
    return Rng(splitmix64(seed_ ^ fnv1a64(name)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::int64_t uniform_index(std::int64_t n) {
    TGLM_CHECK_ARG(n > 0, "Rng::uniform_index: n must be positive");
    return static_cast<std::int64_t>(uniform() * static_cast<double>(n));
  }

  // Box-Muller. Draws two uniforms per normal; no cached state.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void fill_uniform(NumArray<T>& a, double lo, double hi) {
    for (std::int64_t i = 0; i < a.size(); ++i)
      a[i] = static_cast<T>(uniform(lo, hi));
  }

  template <typename T>
  void fill_normal(NumArray<T>& a) {
    for (std::int64_t i = 0; i < a.size(); ++i)
      a[i] = static_cast<T>(normal());
  }

  template <typename It>
  void shuffle(It first, It last) {
    const std::int64_t n = static_cast<std::int64_t>(last - first);
    for (std::int64_t i = n - 1; i > 0; --i) {
      std::int64_t j = uniform_index(i + 1);
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Draws an index from a probability vector via inverse CDF. The input must
// sit on the simplex to within 1e-6.
template <typename T>
std::int64_t sample_categorical(std::span<const T> p, Rng& rng) {
  TGLM_CHECK_ARG(!p.empty(), "sample_categorical: empty distribution");
  double total = 0.0;
  for (const T& v : p) {
    TGLM_CHECK_ARG(static_cast<double>(v) >= -1e-12,
                   "sample_categorical: negative probability");
    total += static_cast<double>(v);
  }
  TGLM_CHECK_ARG(std::abs(total - 1.0) <= 1e-6,
                 "sample_categorical: probabilities do not sum to 1");
  const double u = rng.uniform() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cum += static_cast<double>(p[i]);
    if (u < cum) return static_cast<std::int64_t>(i);
  }
  return static_cast<std::int64_t>(p.size()) - 1;
}

template <typename T>
std::int64_t sample_categorical(const NumArray<T>& p, Rng& rng) {
  return sample_categorical(std::span<const T>(p.data(), static_cast<std::size_t>(p.size())), rng);
}

}  // namespace tglm
