#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "japan/baselines.hpp"
#include "japan/conformal.hpp"
#include "japan/errors.hpp"
#include "japan/rng.hpp"

using namespace japan;

namespace {

constexpr double kPi = std::numbers::pi;

// Mean-only predictor over d outputs.
BasePredictor mean_predictor(const Matrix& y) {
  return fit_base_predictor(Matrix(y.rows(), 0), y, 0.0);
}

}  // namespace

TEST_CASE("d=1 rectangle reduces to the classic split-conformal interval") {
  Rng rng(1);
  const std::size_t m = 999;
  Matrix cal_x(m, 0), cal_y(m, 1);
  for (std::size_t i = 0; i < m; ++i) cal_y(i, 0) = rng.gaussian();
  BasePredictor zero;
  zero.coef = Matrix(0, 1);
  zero.intercept = {0.0};

  const double eps = 0.1;
  const RectRegion region = fit_rect(zero, cal_x, cal_y, eps);

  // classic interval: mu(x) ± q_{1-eps} with the conformal rank
  std::vector<double> abs_res(m);
  for (std::size_t i = 0; i < m; ++i) abs_res[i] = std::fabs(cal_y(i, 0));
  std::sort(abs_res.begin(), abs_res.end());
  const std::size_t k = static_cast<std::size_t>(std::floor(eps * (m + 1)));
  const double q = abs_res[m - k];
  CHECK(region.half_width[0] == doctest::Approx(q));

  const std::vector<double> inside{q * 0.999}, outside{q * 1.001}, boundary{q};
  CHECK(region.contains({}, inside));
  CHECK_FALSE(region.contains({}, outside));
  CHECK(region.contains({}, boundary));  // inclusive
  CHECK(region.area() == doctest::Approx(2.0 * q));
}

TEST_CASE("zero residuals give a zero-width rectangle with full coverage") {
  Matrix cal_x(20, 0), cal_y(20, 2, 3.5);
  const BasePredictor mean = mean_predictor(cal_y);
  const RectRegion region = fit_rect(mean, cal_x, cal_y, 0.1);
  CHECK(region.half_width[0] == 0.0);
  CHECK(region.half_width[1] == 0.0);
  CHECK(region.area() == 0.0);
  const std::vector<double> same{3.5, 3.5};
  CHECK(region.contains({}, same));
}

TEST_CASE("2D Gaussian residual rectangle matches the quantile oracle") {
  Rng rng(2);
  const std::size_t m = 10000;
  Matrix cal_x(m, 0);
  Matrix cal_y = rng.gaussian_matrix(m, 2);
  BasePredictor zero;
  zero.coef = Matrix(0, 2);
  zero.intercept = {0.0, 0.0};
  const RectRegion region = fit_rect(zero, cal_x, cal_y, 0.1);
  // per-dimension level eps/2 = 0.05 → half-width ≈ Φ⁻¹(0.975) ≈ 1.96
  CHECK(region.half_width[0] == doctest::Approx(1.96).epsilon(0.03));
  CHECK(region.half_width[1] == doctest::Approx(1.96).epsilon(0.03));
  CHECK(region.area() == doctest::Approx(15.4).epsilon(0.06));
}

TEST_CASE("rect validates inputs") {
  BasePredictor zero;
  zero.coef = Matrix(0, 1);
  zero.intercept = {0.0};
  CHECK_THROWS_AS(fit_rect(zero, Matrix(0, 0), Matrix(0, 1), 0.1), CalibrationError);
  CHECK_THROWS_AS(fit_rect(zero, Matrix(1, 0), Matrix(1, 1), 0.0), ConfigError);
}

TEST_CASE("isotropic residual ellipse is a circle of the calibrated radius") {
  Rng rng(3);
  const std::size_t n = 4000, m = 2000;
  Matrix train_x(n, 0), cal_x(m, 0);
  const Matrix train_y = rng.gaussian_matrix(n, 2);
  const Matrix cal_y = rng.gaussian_matrix(m, 2);
  BasePredictor zero;
  zero.coef = Matrix(0, 2);
  zero.intercept = {0.0, 0.0};
  const EllipseRegion region = fit_ellipse(zero, train_x, train_y, cal_x, cal_y, 0.1);
  // isotropy: area ≈ pi (sqrt(det Σ) r²) ≈ pi r_cal² where r_cal ≈ chi2(0.9) quantile
  const double r_raw_sq = 4.605170;  // chi-square(2) 0.9-quantile
  CHECK(region.area() == doctest::Approx(kPi * r_raw_sq).epsilon(0.05));

  const std::vector<double> in{0.1, 0.1};
  CHECK(region.contains({}, in));
}

TEST_CASE("ellipse scales homogeneously with the residuals") {
  Rng rng(4);
  const std::size_t n = 2000, m = 1000;
  Matrix train_x(n, 0), cal_x(m, 0);
  Matrix train_y = rng.gaussian_matrix(n, 2);
  Matrix cal_y = rng.gaussian_matrix(m, 2);
  BasePredictor zero;
  zero.coef = Matrix(0, 2);
  zero.intercept = {0.0, 0.0};
  const EllipseRegion base = fit_ellipse(zero, train_x, train_y, cal_x, cal_y, 0.1);

  const double c = 2.5;
  for (std::size_t i = 0; i < train_y.size(); ++i) train_y.data()[i] *= c;
  for (std::size_t i = 0; i < cal_y.size(); ++i) cal_y.data()[i] *= c;
  const EllipseRegion scaled = fit_ellipse(zero, train_x, train_y, cal_x, cal_y, 0.1);
  // Σ refit: Mahalanobis scores are scale-free, radius matches, area gains c^d
  CHECK(scaled.radius == doctest::Approx(base.radius).epsilon(1e-9));
  CHECK(scaled.area() == doctest::Approx(base.area() * c * c).epsilon(1e-9));
}

TEST_CASE("correlated residuals: ellipse beats rectangle") {
  Rng rng(5);
  const std::size_t n = 4000, m = 2000;
  Matrix train_x(n, 0), cal_x(m, 0);
  Matrix train_y(n, 2), cal_y(m, 2);
  const double rho = 0.8, s = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.gaussian(), b = rng.gaussian();
    train_y(i, 0) = a;
    train_y(i, 1) = rho * a + s * b;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double a = rng.gaussian(), b = rng.gaussian();
    cal_y(i, 0) = a;
    cal_y(i, 1) = rho * a + s * b;
  }
  BasePredictor zero;
  zero.coef = Matrix(0, 2);
  zero.intercept = {0.0, 0.0};
  const EllipseRegion ellipse = fit_ellipse(zero, train_x, train_y, cal_x, cal_y, 0.1);
  const RectRegion rect = fit_rect(zero, cal_x, cal_y, 0.1);
  CHECK(ellipse.area() < rect.area());
}

TEST_CASE("ellipse needs d+1 residuals and jitters singular covariances") {
  BasePredictor zero;
  zero.coef = Matrix(0, 2);
  zero.intercept = {0.0, 0.0};
  CHECK_THROWS_AS(fit_ellipse(zero, Matrix(2, 0), Matrix(2, 2), Matrix(2, 0), Matrix(2, 2), 0.1),
                  ConfigError);

  // perfectly collinear residuals: jitter keeps the covariance usable
  Matrix train_x(10, 0), cal_x(10, 0);
  Matrix train_y(10, 2), cal_y(10, 2);
  for (std::size_t i = 0; i < 10; ++i) {
    train_y(i, 0) = static_cast<double>(i) - 4.5;
    train_y(i, 1) = 2.0 * train_y(i, 0);
    cal_y(i, 0) = train_y(i, 0);
    cal_y(i, 1) = train_y(i, 1);
  }
  const EllipseRegion region = fit_ellipse(zero, train_x, train_y, cal_x, cal_y, 0.2);
  CHECK(std::isfinite(region.area()));
}

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(kPi));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 / 3.0 * kPi));
}

TEST_CASE("both baselines keep marginal coverage on exchangeable data") {
  Rng rng(6);
  const double eps = 0.1;
  const std::size_t n = 3000, m = 1500, t = 1500;
  Matrix train_x(n, 0), cal_x(m, 0), test_x(t, 0);
  const Matrix train_y = rng.gaussian_matrix(n, 2);
  const Matrix cal_y = rng.gaussian_matrix(m, 2);
  const Matrix test_y = rng.gaussian_matrix(t, 2);
  const BasePredictor mean = mean_predictor(train_y);

  const double bound = 1.0 - eps - 3.0 * std::sqrt(eps * (1.0 - eps) / static_cast<double>(t));

  const RectRegion rect = fit_rect(mean, cal_x, cal_y, eps);
  std::size_t rect_hits = 0;
  for (std::size_t i = 0; i < t; ++i) {
    rect_hits += rect.contains({}, test_y.row_span(i)) ? 1 : 0;
  }
  CHECK(static_cast<double>(rect_hits) / t >= bound);

  const EllipseRegion ellipse = fit_ellipse(mean, train_x, train_y, cal_x, cal_y, eps);
  std::size_t ell_hits = 0;
  for (std::size_t i = 0; i < t; ++i) {
    ell_hits += ellipse.contains({}, test_y.row_span(i)) ? 1 : 0;
  }
  CHECK(static_cast<double>(ell_hits) / t >= bound);
}
