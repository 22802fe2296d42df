#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "japan/matrix.hpp"

namespace japan {

// xorshift64* stream seeded through splitmix64. Identical seeds produce
// bit-identical streams on every platform, which the golden tests rely on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform draw in [0, 1).
  double uniform();

  // Standard normal via Box-Muller; the spare draw is cached.
  double gaussian();

  // n×d matrix of i.i.d. standard normal draws, row-major fill order.
  Matrix gaussian_matrix(std::size_t n, std::size_t d);

  // Unbiased draw in [0, n).
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // Independent substream for the given salt. Used to derive the split,
  // init, batching and sampling streams from one run seed.
  Rng split(std::uint64_t salt) const;

 private:
  std::uint64_t state_;
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// log N(z; 0, I) = -(d/2)·ln(2π) - ||z||²/2
double log_gaussian_density(std::span<const double> z);

}  // namespace japan
