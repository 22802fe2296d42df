#include "japan/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace japan {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t s = seed;
  state_ = splitmix64(s);
  if (state_ == 0) state_ = 0x2545F4914F6CDD1Dull;
}

std::uint64_t Rng::next_u64() {
  std::uint64_t x = state_;
  x ^= x >> 12;
  x ^= x << 25;
  x ^= x >> 27;
  state_ = x;
  return x * 0x2545F4914F6CDD1Dull;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Matrix Rng::gaussian_matrix(std::size_t n, std::size_t d) {
  Matrix m(n, d);
  double* p = m.data();
  for (std::size_t i = 0; i < n * d; ++i) p[i] = gaussian();
  return m;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

Rng Rng::split(std::uint64_t salt) const {
  std::uint64_t s = seed_ ^ (0xA0761D6478BD642Full * (salt + 1));
  return Rng(splitmix64(s));
}

double log_gaussian_density(std::span<const double> z) {
  constexpr double half_log_2pi = 0.91893853320467274178;
  double sq = 0.0;
  for (double v : z) sq += v * v;
  return -static_cast<double>(z.size()) * half_log_2pi - 0.5 * sq;
}

}  // namespace japan
