#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "japan/conformal.hpp"
#include "japan/flow.hpp"

namespace japan {

struct AreaEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t capped = 0;  // samples whose importance weight hit the cap
};

// Latent-space Monte Carlo estimate of the area of {y : log p̂(y|x) ≥ τ}.
// Draws z_i ~ p_Z, maps y_i = h⁻¹(z_i, x) and weighs by
// exp(log_det_inv - log p_Z(z_i)), which equals exp(-log p̂(y_i|x)).
// Deterministic for a fixed seed regardless of the thread count: samples
// are chunked by index and each chunk draws from its own substream.
AreaEstimate mc_area(const FlowModel& model, std::span<const double> x, double tau,
                     std::uint64_t n_samples, std::uint64_t seed, unsigned threads = 1);

// As above but with an arbitrary membership test; `ll` is log p̂(y_i|x) and
// `z` the latent draw. Used for the latent-ball and τ-adaptive regions.
using McIndicator = std::function<bool(std::span<const double> z, double ll)>;
AreaEstimate mc_area_indicator(const FlowModel& model, std::span<const double> x,
                               const McIndicator& indicator, std::uint64_t n_samples,
                               std::uint64_t seed, unsigned threads = 1);

struct Grid2D {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  std::size_t resolution = 1000;  // cells per axis

  double cell_area() const {
    const double sx = (x_hi - x_lo) / static_cast<double>(resolution);
    const double sy = (y_hi - y_lo) / static_cast<double>(resolution);
    return sx * sy;
  }

  // Bounds covering the given 2-column sample ± pad standard deviations.
  static Grid2D covering(const Matrix& y, double pad_std = 4.0, std::size_t resolution = 1000);
};

using DensityFn = std::function<double(double, double)>;  // log density at (y1, y2)

// Riemann count over cell centres: cell_area × #{log density ≥ τ}. d = 2 only.
double grid_area_2d(const DensityFn& log_density, const Grid2D& grid, double tau);

// Fraction of test pairs contained in the region.
double coverage(const PredictionRegion& region, const Matrix& test_x, const Matrix& test_y);

// Dataset-level area of a region: a single estimate for context-free
// regions, otherwise the mean over per-test-context estimates (n_samples
// applies per context). context_cap > 0 limits how many test contexts are
// averaged. Posterior regions use the 2-D grid oracle.
AreaEstimate region_area(const PredictionRegion& region, const Matrix& test_x,
                         std::uint64_t n_samples, std::uint64_t seed, unsigned threads = 1,
                         std::size_t context_cap = 0);

}  // namespace japan
