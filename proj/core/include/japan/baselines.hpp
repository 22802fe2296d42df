#pragma once

#include <span>
#include <vector>

#include "japan/conformal.hpp"
#include "japan/matrix.hpp"

namespace japan {

// Product of per-dimension conformal intervals around μ(x), each at level
// ε/d (Bonferroni). A half-width of +inf means that dimension is unbounded.
struct RectRegion {
  BasePredictor predictor;
  std::vector<double> half_width;

  bool contains(std::span<const double> x, std::span<const double> y) const;
  double area() const;  // product of interval widths
};

RectRegion fit_rect(const BasePredictor& predictor, const Matrix& cal_x, const Matrix& cal_y,
                    double epsilon);

// Mahalanobis ball of the residuals: covariance from the train split,
// radius from the conformal quantile of calibration distances.
struct EllipseRegion {
  BasePredictor predictor;
  Matrix covariance;        // d×d, jittered to be positive definite
  Matrix chol_lower;        // Cholesky factor of the covariance
  double radius = 0.0;      // calibrated Mahalanobis threshold

  double mahalanobis(std::span<const double> residual) const;
  bool contains(std::span<const double> x, std::span<const double> y) const;
  double area() const;  // V_d · sqrt(det Σ) · r^d
};

EllipseRegion fit_ellipse(const BasePredictor& predictor, const Matrix& train_x,
                          const Matrix& train_y, const Matrix& cal_x, const Matrix& cal_y,
                          double epsilon);

// Volume of the d-dimensional unit ball.
double unit_ball_volume(std::size_t d);

}  // namespace japan
