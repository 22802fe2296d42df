#include "japan/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "japan/errors.hpp"

namespace japan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix residuals(const BasePredictor& predictor, const Matrix& x, const Matrix& y) {
  const Matrix yhat = predictor.predict_batch(x);
  Matrix r(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) r(i, j) = y(i, j) - yhat(i, j);
  }
  return r;
}

// k-th largest value with k = ⌊level·(m+1)⌋; +inf when k = 0, mirroring the
// τ = -inf convention for density scores.
double conformal_quantile(std::vector<double> values, double level) {
  const std::size_t m = values.size();
  const std::size_t k =
      static_cast<std::size_t>(std::floor(level * static_cast<double>(m + 1)));
  if (k == 0) return kInf;
  std::sort(values.begin(), values.end());
  return values[m - k];
}

}  // namespace

RectRegion fit_rect(const BasePredictor& predictor, const Matrix& cal_x, const Matrix& cal_y,
                    double epsilon) {
  if (cal_y.rows() == 0) throw CalibrationError("fit_rect: empty calibration set");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("fit_rect: epsilon not in (0,1)");
  const std::size_t d = cal_y.cols();
  const Matrix res = residuals(predictor, cal_x, cal_y);
  RectRegion region;
  region.predictor = predictor;
  region.half_width.resize(d);
  const double per_dim = epsilon / static_cast<double>(d);
  std::vector<double> abs_res(res.rows());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < res.rows(); ++i) abs_res[i] = std::fabs(res(i, j));
    region.half_width[j] = conformal_quantile(abs_res, per_dim);
  }
  return region;
}

bool RectRegion::contains(std::span<const double> x, std::span<const double> y) const {
  const std::vector<double> yhat = predictor.predict(x);
  for (std::size_t j = 0; j < half_width.size(); ++j) {
    if (std::fabs(y[j] - yhat[j]) > half_width[j]) return false;
  }
  return true;
}

double RectRegion::area() const {
  double a = 1.0;
  for (double w : half_width) a *= 2.0 * w;
  return a;
}

double unit_ball_volume(std::size_t d) {
  const double half_d = 0.5 * static_cast<double>(d);
  return std::pow(std::numbers::pi, half_d) / std::tgamma(half_d + 1.0);
}

EllipseRegion fit_ellipse(const BasePredictor& predictor, const Matrix& train_x,
                          const Matrix& train_y, const Matrix& cal_x, const Matrix& cal_y,
                          double epsilon) {
  if (cal_y.rows() == 0) throw CalibrationError("fit_ellipse: empty calibration set");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("fit_ellipse: epsilon not in (0,1)");
  const std::size_t d = train_y.cols();
  if (train_y.rows() < d + 1) {
    throw ConfigError("fit_ellipse: need at least d+1 residuals for the covariance");
  }

  const Matrix res = residuals(predictor, train_x, train_y);
  std::vector<double> mean(d, 0.0);
  const double inv_n = 1.0 / static_cast<double>(res.rows());
  for (std::size_t i = 0; i < res.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += res(i, j);
  }
  for (double& m : mean) m *= inv_n;

  EllipseRegion region;
  region.predictor = predictor;
  region.covariance = Matrix(d, d);
  for (std::size_t i = 0; i < res.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double rj = res(i, j) - mean[j];
      for (std::size_t k = j; k < d; ++k) {
        region.covariance(j, k) += rj * (res(i, k) - mean[k]);
      }
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = j; k < d; ++k) {
      region.covariance(j, k) *= inv_n;
      region.covariance(k, j) = region.covariance(j, k);
    }
  }

  if (!cholesky(region.covariance, region.chol_lower)) {
    for (std::size_t j = 0; j < d; ++j) region.covariance(j, j) += 1e-6;
    if (!cholesky(region.covariance, region.chol_lower)) {
      throw NumericError("fit_ellipse: residual covariance is singular even after jitter");
    }
  }

  const Matrix cal_res = residuals(predictor, cal_x, cal_y);
  std::vector<double> dist(cal_res.rows());
  for (std::size_t i = 0; i < cal_res.rows(); ++i) {
    dist[i] = region.mahalanobis(cal_res.row_span(i));
  }
  region.radius = conformal_quantile(std::move(dist), epsilon);
  return region;
}

double EllipseRegion::mahalanobis(std::span<const double> residual) const {
  // sqrt(rᵀ Σ⁻¹ r) via the Cholesky factor: solve L u = r, distance = ‖u‖.
  const std::size_t d = chol_lower.rows();
  std::vector<double> u(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = residual[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol_lower(i, k) * u[k];
    u[i] = s / chol_lower(i, i);
  }
  double sq = 0.0;
  for (double v : u) sq += v * v;
  return std::sqrt(sq);
}

bool EllipseRegion::contains(std::span<const double> x, std::span<const double> y) const {
  const std::vector<double> yhat = predictor.predict(x);
  std::vector<double> r(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) r[j] = y[j] - yhat[j];
  return mahalanobis(r) <= radius;
}

double EllipseRegion::area() const {
  const std::size_t d = chol_lower.rows();
  if (!std::isfinite(radius)) return kInf;
  double sqrt_det = 1.0;
  for (std::size_t j = 0; j < d; ++j) sqrt_det *= chol_lower(j, j);
  return unit_ball_volume(d) * sqrt_det * std::pow(radius, static_cast<double>(d));
}

}  // namespace japan
