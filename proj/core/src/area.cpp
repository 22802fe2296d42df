#include "japan/area.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "japan/errors.hpp"
#include "japan/rng.hpp"

namespace japan {

namespace {

constexpr std::uint64_t kChunk = 8192;
constexpr double kLogWeightCap = 50.0;

struct ChunkSums {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t capped = 0;
  bool bad = false;
  std::vector<double> bad_z;
};

ChunkSums run_chunk(const FlowModel& model, std::span<const double> x, const McIndicator& indicator,
                    std::uint64_t count, Rng rng) {
  const std::size_t d = model.y_dim();
  ChunkSums out;
  Matrix z = rng.gaussian_matrix(count, d);
  Matrix ctx(count, model.context_dim());
  for (std::size_t i = 0; i < count && model.context_dim() > 0; ++i) {
    std::copy(x.begin(), x.end(), ctx.row(i));
  }
  std::vector<double> log_det_inv;
  model.inverse_batch(z, ctx, log_det_inv);
  for (std::size_t i = 0; i < count; ++i) {
    const std::span<const double> zi = z.row_span(i);
    const double log_pz = log_gaussian_density(zi);
    const double ll = log_pz - log_det_inv[i];  // log p̂(y_i | x)
    double log_w = -ll;
    if (!std::isfinite(log_w)) {
      out.bad = true;
      out.bad_z.assign(zi.begin(), zi.end());
      return out;
    }
    if (log_w > kLogWeightCap) {
      log_w = kLogWeightCap;
      ++out.capped;
    }
    if (indicator(zi, ll)) {
      const double w = std::exp(log_w);
      out.sum += w;
      out.sum_sq += w * w;
    }
  }
  return out;
}

}  // namespace

AreaEstimate mc_area_indicator(const FlowModel& model, std::span<const double> x,
                               const McIndicator& indicator, std::uint64_t n_samples,
                               std::uint64_t seed, unsigned threads) {
  if (n_samples < 1) throw ConfigError("mc_area: sample count must be >= 1");
  const std::uint64_t n_chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<ChunkSums> sums(n_chunks);
  Rng base(seed);

  auto work = [&](unsigned worker, unsigned stride) {
    for (std::uint64_t c = worker; c < n_chunks; c += stride) {
      const std::uint64_t count = std::min(kChunk, n_samples - c * kChunk);
      sums[c] = run_chunk(model, x, indicator, count, base.split(c + 1));
    }
  };
  const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, n_chunks));
  if (n_workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work, w, n_workers);
    for (auto& t : pool) t.join();
  }

  AreaEstimate est;
  est.samples = n_samples;
  double total = 0.0, total_sq = 0.0;
  for (const ChunkSums& s : sums) {
    if (s.bad) {
      std::ostringstream msg;
      msg << "mc_area: non-finite importance weight at z = (";
      for (std::size_t i = 0; i < s.bad_z.size(); ++i) {
        msg << (i ? ", " : "") << s.bad_z[i];
      }
      msg << ")";
      throw EstimatorError(msg.str());
    }
    total += s.sum;
    total_sq += s.sum_sq;
    est.capped += s.capped;
  }
  const double n = static_cast<double>(n_samples);
  est.value = total / n;
  if (n_samples > 1) {
    const double var = std::max(0.0, (total_sq - total * total / n) / (n - 1.0));
    est.std_error = std::sqrt(var / n);
  }
  return est;
}

AreaEstimate mc_area(const FlowModel& model, std::span<const double> x, double tau,
                     std::uint64_t n_samples, std::uint64_t seed, unsigned threads) {
  return mc_area_indicator(
      model, x, [tau](std::span<const double>, double ll) { return ll >= tau; }, n_samples, seed,
      threads);
}

Grid2D Grid2D::covering(const Matrix& y, double pad_std, std::size_t resolution) {
  if (y.cols() != 2) throw UnsupportedError("Grid2D::covering: data must have 2 columns");
  if (y.rows() == 0) throw ConfigError("Grid2D::covering: empty sample");
  Grid2D g;
  g.resolution = std::max<std::size_t>(resolution, 100);
  double mean[2] = {0, 0}, var[2] = {0, 0};
  double lo[2], hi[2];
  for (int j = 0; j < 2; ++j) {
    lo[j] = y(0, j);
    hi[j] = y(0, j);
  }
  const double inv_n = 1.0 / static_cast<double>(y.rows());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (int j = 0; j < 2; ++j) {
      const double v = y(i, j);
      mean[j] += v;
      lo[j] = std::min(lo[j], v);
      hi[j] = std::max(hi[j], v);
    }
  }
  mean[0] *= inv_n;
  mean[1] *= inv_n;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (int j = 0; j < 2; ++j) {
      const double diff = y(i, j) - mean[j];
      var[j] += diff * diff;
    }
  }
  const double sd0 = std::sqrt(var[0] * inv_n), sd1 = std::sqrt(var[1] * inv_n);
  g.x_lo = lo[0] - pad_std * sd0;
  g.x_hi = hi[0] + pad_std * sd0;
  g.y_lo = lo[1] - pad_std * sd1;
  g.y_hi = hi[1] + pad_std * sd1;
  return g;
}

double grid_area_2d(const DensityFn& log_density, const Grid2D& grid, double tau) {
  if (grid.resolution < 1) throw ConfigError("grid_area_2d: resolution must be >= 1");
  const std::size_t n = grid.resolution;
  const double sx = (grid.x_hi - grid.x_lo) / static_cast<double>(n);
  const double sy = (grid.y_hi - grid.y_lo) / static_cast<double>(n);
  std::uint64_t inside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = grid.x_lo + (static_cast<double>(i) + 0.5) * sx;
    for (std::size_t j = 0; j < n; ++j) {
      const double cy = grid.y_lo + (static_cast<double>(j) + 0.5) * sy;
      if (log_density(cx, cy) >= tau) ++inside;
    }
  }
  return static_cast<double>(inside) * sx * sy;
}

double coverage(const PredictionRegion& region, const Matrix& test_x, const Matrix& test_y) {
  if (test_y.rows() == 0) throw ConfigError("coverage: empty test set");
  const std::vector<char> hit = region.contains_batch(test_x, test_y);
  std::uint64_t count = 0;
  for (char h : hit) count += h != 0;
  return static_cast<double>(count) / static_cast<double>(hit.size());
}

namespace {

AreaEstimate posterior_grid_area(const PredictionRegion& region, const Matrix& test_x,
                                 std::size_t context_cap) {
  const FlowModel& flow = *region.flow;
  if (flow.context_dim() != 2) {
    throw UnsupportedError("region_area: posterior areas use the 2-D grid oracle");
  }
  if (!region.predictor) throw ConfigError("region_area: posterior region needs a predictor");
  // Standardized data: ±8 standard deviations bounds the support.
  Grid2D grid{-8.0, 8.0, -8.0, 8.0, 400};
  const std::size_t n_ctx =
      context_cap > 0 ? std::min(context_cap, test_x.rows()) : test_x.rows();
  if (n_ctx == 0) throw ConfigError("region_area: no test contexts");
  AreaEstimate est;
  double total = 0.0;
  for (std::size_t i = 0; i < n_ctx; ++i) {
    const std::vector<double> yhat = region.predictor->predict({test_x.row(i), test_x.cols()});
    const DensityFn fn = [&](double a, double b) {
      const double ctx[2] = {a, b};
      return flow.log_likelihood(yhat, ctx);
    };
    total += grid_area_2d(fn, grid, region.cal.tau);
  }
  est.value = total / static_cast<double>(n_ctx);
  est.samples = static_cast<std::uint64_t>(n_ctx) * grid.resolution * grid.resolution;
  return est;
}

}  // namespace

AreaEstimate region_area(const PredictionRegion& region, const Matrix& test_x,
                         std::uint64_t n_samples, std::uint64_t seed, unsigned threads,
                         std::size_t context_cap) {
  if (region.cal.k == 0) {
    throw EstimatorError("region_area: threshold is -inf, the region is unbounded");
  }
  const FlowModel& flow = *region.flow;
  const double tau = region.cal.tau;

  if (region.variant == Variant::Posterior) {
    return posterior_grid_area(region, test_x, context_cap);
  }

  const auto indicator_for = [&](std::span<const double> x) -> McIndicator {
    switch (region.variant) {
      case Variant::Latent:
        return [tau](std::span<const double> z, double) {
          return log_gaussian_density(z) >= tau;
        };
      case Variant::TauAdaptiveGlobal:
      case Variant::TauAdaptiveKnn: {
        const double t = region.threshold(x);
        return [t](std::span<const double>, double ll) { return ll >= t; };
      }
      default:
        return [tau](std::span<const double>, double ll) { return ll >= tau; };
    }
  };

  // Context-free regions get one estimate; conditional regions average
  // per-test-context estimates.
  const bool conditional =
      flow.context_dim() > 0 || region.variant == Variant::ConditionalOnPrediction;
  if (!conditional) {
    return mc_area_indicator(flow, {}, indicator_for({}), n_samples, seed, threads);
  }

  const std::size_t n_ctx =
      context_cap > 0 ? std::min(context_cap, test_x.rows()) : test_x.rows();
  if (n_ctx == 0) throw ConfigError("region_area: no test contexts");
  Rng seeder(seed);
  AreaEstimate est;
  double total = 0.0, var_sum = 0.0;
  for (std::size_t i = 0; i < n_ctx; ++i) {
    std::vector<double> ctx;
    if (region.variant == Variant::ConditionalOnPrediction) {
      ctx = region.predictor->predict({test_x.row(i), test_x.cols()});
    } else {
      ctx.assign(test_x.row(i), test_x.row(i) + test_x.cols());
    }
    const AreaEstimate one = mc_area_indicator(flow, ctx, indicator_for(ctx), n_samples,
                                               seeder.split(i).next_u64(), threads);
    total += one.value;
    var_sum += one.std_error * one.std_error;
    est.samples += one.samples;
    est.capped += one.capped;
  }
  est.value = total / static_cast<double>(n_ctx);
  est.std_error = std::sqrt(var_sum) / static_cast<double>(n_ctx);
  return est;
}

}  // namespace japan
