#pragma once

// Deterministic random streams. std::mt19937_64 supplies raw bits; the
// distributions are written out here because libstdc++'s distribution objects
// are free to change their draw order between releases, and reproducibility of
// datasets and training runs is a contract of this project (same seed, same
// bytes out).

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ddm/common.hpp"

namespace ddm {

// Derives decorrelated child seeds from a master seed, so that sample i of a
// dataset can own an independent stream regardless of generation order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class StableRng {
 public:
  explicit StableRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform on [0, 1) with 53 significant bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Box-Muller; draws two uniforms per pair and caches the second deviate.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double c = std::cos(2.0 * pi * u2);
    double s = std::sin(2.0 * pi * u2);
    spare_ = r * s;
    have_spare_ = true;
    return mean + stddev * r * c;
  }

  // Unbiased integer in [0, n) by rejection on the top multiple of n.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw NumericalError("StableRng::below called with n = 0");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ddm
