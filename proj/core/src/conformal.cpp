#include "japan/conformal.hpp"

#include <algorithm>
#include <cmath>

#include "japan/errors.hpp"
#include "japan/rng.hpp"

namespace japan {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Original: return "original";
    case Variant::Unconditional: return "unconditional";
    case Variant::ConditionalOnPrediction: return "conditional";
    case Variant::Posterior: return "posterior";
    case Variant::Latent: return "latent";
    case Variant::TauAdaptiveGlobal: return "tau_global";
    case Variant::TauAdaptiveKnn: return "tau_knn";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Base predictor

BasePredictor fit_base_predictor(const Matrix& train_x, const Matrix& train_y, double lambda) {
  const std::size_t n = train_y.rows(), c = train_x.cols(), d = train_y.cols();
  if (n == 0) throw ConfigError("fit_base_predictor: empty training set");
  if (c > 0 && train_x.rows() != n) {
    throw DimensionError("fit_base_predictor: x/y row mismatch");
  }
  if (lambda < 0.0) throw ConfigError("fit_base_predictor: lambda must be >= 0");

  BasePredictor p;
  p.lambda = lambda;
  p.intercept.assign(d, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> x_mean(c, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) p.intercept[j] += train_y(i, j);
    p.intercept[j] *= inv_n;
  }
  if (c == 0) {
    p.coef = Matrix(0, d);
    return p;
  }
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t i = 0; i < n; ++i) x_mean[j] += train_x(i, j);
    x_mean[j] *= inv_n;
  }

  // Normal equations on centred data: (XᵀX + λI) W = XᵀY.
  Matrix a(c, c), b(c, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double xij = train_x(i, j) - x_mean[j];
      for (std::size_t k = j; k < c; ++k) a(j, k) += xij * (train_x(i, k) - x_mean[k]);
      for (std::size_t k = 0; k < d; ++k) b(j, k) += xij * (train_y(i, k) - p.intercept[k]);
    }
  }
  for (std::size_t j = 0; j < c; ++j) {
    a(j, j) += lambda;
    for (std::size_t k = 0; k < j; ++k) a(j, k) = a(k, j);
  }

  Matrix lower;
  if (!cholesky(a, lower)) {
    throw NumericError("fit_base_predictor: singular normal equations; use lambda > 0");
  }
  p.coef = Matrix(c, d);
  std::vector<double> col(c);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t j = 0; j < c; ++j) col[j] = b(j, k);
    const std::vector<double> w = cholesky_solve(lower, col);
    for (std::size_t j = 0; j < c; ++j) p.coef(j, k) = w[j];
  }
  for (std::size_t k = 0; k < d; ++k) {
    double shift = 0.0;
    for (std::size_t j = 0; j < c; ++j) shift += x_mean[j] * p.coef(j, k);
    p.intercept[k] -= shift;
  }
  return p;
}

std::vector<double> BasePredictor::predict(std::span<const double> x) const {
  if (x.size() != coef.rows()) throw DimensionError("BasePredictor::predict: wrong x length");
  std::vector<double> out(intercept);
  for (std::size_t j = 0; j < coef.rows(); ++j) {
    for (std::size_t k = 0; k < coef.cols(); ++k) out[k] += x[j] * coef(j, k);
  }
  return out;
}

Matrix BasePredictor::predict_batch(const Matrix& x) const {
  if (x.cols() != coef.rows()) throw DimensionError("BasePredictor::predict_batch: wrong width");
  Matrix out = coef.rows() > 0 ? matmul(x, coef) : Matrix(x.rows(), intercept.size());
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t k = 0; k < out.cols(); ++k) out(i, k) += intercept[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Calibration

CalibrationResult calibrate(std::vector<double> scores, double epsilon) {
  if (scores.empty()) throw CalibrationError("calibrate: empty score sequence");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("calibrate: epsilon not in (0,1)");
  CalibrationResult r;
  r.epsilon = epsilon;
  std::sort(scores.begin(), scores.end());
  r.sorted_scores = std::move(scores);
  const std::size_t m = r.sorted_scores.size();
  r.k = static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(m + 1)));
  r.tau = r.k >= 1 ? r.sorted_scores[r.k - 1] : -std::numeric_limits<double>::infinity();
  return r;
}

double p_value(const std::vector<double>& scores, double alpha_star) {
  if (scores.empty()) throw CalibrationError("p_value: empty score sequence");
  std::size_t count = 0;
  for (double a : scores) {
    if (a <= alpha_star) ++count;
  }
  return static_cast<double>(1 + count) / static_cast<double>(scores.size() + 1);
}

// ---------------------------------------------------------------------------
// Conformity scores

namespace {

void require_predictor(Variant v, const BasePredictor* predictor) {
  if (predictor == nullptr) {
    throw ConfigError(std::string("variant '") + variant_name(v) + "' needs a base predictor");
  }
}

// Context matrix the flow sees for a batch of candidate pairs.
Matrix flow_context(Variant v, const FlowModel& flow, const BasePredictor* predictor,
                    const Matrix& x) {
  switch (v) {
    case Variant::Original:
    case Variant::Latent:
    case Variant::TauAdaptiveGlobal:
    case Variant::TauAdaptiveKnn:
      return flow.context_dim() > 0 ? x : Matrix(x.rows(), 0);
    case Variant::Unconditional:
      return Matrix(x.rows(), 0);
    case Variant::ConditionalOnPrediction:
      require_predictor(v, predictor);
      return predictor->predict_batch(x);
    case Variant::Posterior:
      return Matrix(x.rows(), 0);  // unused; posterior swaps roles below
  }
  return Matrix(x.rows(), 0);
}

}  // namespace

std::vector<double> conformity_scores(Variant v, const FlowModel& flow,
                                      const BasePredictor* predictor, const Matrix& x,
                                      const Matrix& y) {
  switch (v) {
    case Variant::Original:
    case Variant::Unconditional:
    case Variant::ConditionalOnPrediction:
      return flow.log_likelihood_batch(y, flow_context(v, flow, predictor, x));
    case Variant::Posterior: {
      require_predictor(v, predictor);
      const Matrix yhat = predictor->predict_batch(x);
      return flow.log_likelihood_batch(yhat, y);
    }
    case Variant::Latent:
    case Variant::TauAdaptiveGlobal:
    case Variant::TauAdaptiveKnn: {
      std::vector<double> log_det;
      const Matrix z = flow.forward_batch(y, flow_context(v, flow, predictor, x), log_det);
      std::vector<double> scores(z.rows());
      for (std::size_t i = 0; i < z.rows(); ++i) scores[i] = log_gaussian_density(z.row_span(i));
      return scores;
    }
  }
  throw ConfigError("conformity_scores: unknown variant");
}

double conformity_score(Variant v, const FlowModel& flow, const BasePredictor* predictor,
                        std::span<const double> x, std::span<const double> y) {
  Matrix xm(1, x.size());
  std::copy(x.begin(), x.end(), xm.row(0));
  Matrix ym(1, y.size());
  std::copy(y.begin(), y.end(), ym.row(0));
  return conformity_scores(v, flow, predictor, xm, ym)[0];
}

// ---------------------------------------------------------------------------
// Regions

PredictionRegion make_region(Variant v, std::size_t knn_k, std::shared_ptr<const FlowModel> flow,
                             std::shared_ptr<const BasePredictor> predictor, const Matrix& cal_x,
                             const Matrix& cal_y, double epsilon) {
  if (!flow) throw ConfigError("make_region: flow model is required");
  PredictionRegion region;
  region.variant = v;
  region.knn_k = knn_k;
  region.flow = std::move(flow);
  region.predictor = std::move(predictor);

  const bool adaptive = v == Variant::TauAdaptiveGlobal || v == Variant::TauAdaptiveKnn;
  if (v == Variant::TauAdaptiveKnn) {
    if (knn_k < 1) throw ConfigError("make_region: K must be >= 1");
    if (knn_k > cal_y.rows()) throw ConfigError("make_region: K exceeds calibration size");
  }

  std::vector<double> scores;
  std::vector<double> phi;
  if (adaptive || v == Variant::Latent) {
    std::vector<double> log_det;
    const Matrix ctx = region.flow->context_dim() > 0 ? cal_x : Matrix(cal_x.rows(), 0);
    const Matrix z = region.flow->forward_batch(cal_y, ctx, log_det);
    scores.resize(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) scores[i] = log_gaussian_density(z.row_span(i));
    if (adaptive) phi = log_det;
    region.cal = calibrate(scores, epsilon);
    if (v == Variant::TauAdaptiveGlobal && region.cal.k >= 1) {
      // Anchor: the calibration pair attaining the k-th smallest latent
      // score; ties keep the smallest index.
      const double target = region.cal.tau;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] == target) {
          region.cal.anchor_z.assign(z.row(i), z.row(i) + z.cols());
          break;
        }
      }
    }
    if (v == Variant::TauAdaptiveKnn) {
      region.cal.phi_x = cal_x;
      region.cal.phi = std::move(phi);
    }
  } else {
    scores = conformity_scores(v, *region.flow, region.predictor.get(), cal_x, cal_y);
    region.cal = calibrate(std::move(scores), epsilon);
  }
  return region;
}

namespace {

// Directions spanning the latent level set {log p_Z = τ̃}. The quantile is a
// scalar, so the attaining set is a sphere; the volume correction is
// averaged over it rather than taken at the single stored latent, whose
// direction is an artifact of which calibration pair hit the quantile.
Matrix level_set_points(double radius, std::size_t d) {
  constexpr std::size_t kDirections = 32;
  if (d == 1) {
    Matrix z(2, 1);
    z(0, 0) = radius;
    z(1, 0) = -radius;
    return z;
  }
  Matrix z(kDirections, d);
  if (d == 2) {
    for (std::size_t i = 0; i < kDirections; ++i) {
      const double a = 2.0 * 3.14159265358979323846 * static_cast<double>(i) / kDirections;
      z(i, 0) = radius * std::cos(a);
      z(i, 1) = radius * std::sin(a);
    }
    return z;
  }
  Rng rng(0x5EA5);  // fixed table, deterministic across calls and platforms
  for (std::size_t i = 0; i < kDirections; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      z(i, j) = rng.gaussian();
      norm += z(i, j) * z(i, j);
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < d; ++j) z(i, j) *= radius / norm;
  }
  return z;
}

}  // namespace

double tau_adaptive_threshold(const PredictionRegion& region, std::span<const double> x) {
  if (region.variant != Variant::TauAdaptiveGlobal) {
    throw ConfigError("tau_adaptive_threshold: region is not tau-adaptive");
  }
  if (region.cal.anchor_z.empty()) {
    throw CalibrationError("tau_adaptive_threshold: no stored anchor latent");
  }
  double radius_sq = 0.0;
  for (double v : region.cal.anchor_z) radius_sq += v * v;
  const Matrix z = level_set_points(std::sqrt(radius_sq), region.flow->y_dim());
  Matrix ctx(z.rows(), region.flow->context_dim());
  for (std::size_t i = 0; i < z.rows() && region.flow->context_dim() > 0; ++i) {
    std::copy(x.begin(), x.end(), ctx.row(i));
  }
  // Φ(h⁻¹(z, x), x) is minus the inverse log-det at z.
  std::vector<double> log_det_inv;
  region.flow->inverse_batch(z, ctx, log_det_inv);
  double mean_phi = 0.0;
  for (double ldi : log_det_inv) mean_phi -= ldi;
  mean_phi /= static_cast<double>(log_det_inv.size());
  return region.cal.tau + mean_phi;
}

double knn_threshold(const PredictionRegion& region, std::span<const double> x) {
  if (region.variant != Variant::TauAdaptiveKnn) {
    throw ConfigError("knn_threshold: region is not knn-adaptive");
  }
  const std::size_t m = region.cal.phi.size();
  if (region.knn_k > m) throw ConfigError("knn_threshold: K exceeds calibration size");
  const Matrix& cx = region.cal.phi_x;
  std::vector<std::pair<double, std::size_t>> dist(m);
  for (std::size_t i = 0; i < m; ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < cx.cols(); ++j) {
      const double diff = cx(i, j) - x[j];
      d2 += diff * diff;
    }
    dist[i] = {d2, i};
  }
  std::sort(dist.begin(), dist.end());
  double mean_phi = 0.0;
  for (std::size_t i = 0; i < region.knn_k; ++i) mean_phi += region.cal.phi[dist[i].second];
  mean_phi /= static_cast<double>(region.knn_k);
  return region.cal.tau + mean_phi;
}

double PredictionRegion::threshold(std::span<const double> x) const {
  if (cal.k == 0) return -std::numeric_limits<double>::infinity();
  switch (variant) {
    case Variant::TauAdaptiveGlobal:
      return tau_adaptive_threshold(*this, x);
    case Variant::TauAdaptiveKnn:
      return knn_threshold(*this, x);
    default:
      return cal.tau;
  }
}

double PredictionRegion::membership_score(std::span<const double> x,
                                          std::span<const double> y) const {
  if (variant == Variant::TauAdaptiveGlobal || variant == Variant::TauAdaptiveKnn) {
    const std::span<const double> ctx = flow->context_dim() > 0 ? x : std::span<const double>{};
    return flow->log_likelihood(y, ctx);
  }
  return conformity_score(variant, *flow, predictor.get(), x, y);
}

bool PredictionRegion::contains(std::span<const double> x, std::span<const double> y) const {
  if (cal.k == 0) return true;
  return membership_score(x, y) >= threshold(x);
}

std::vector<char> PredictionRegion::contains_batch(const Matrix& x, const Matrix& y) const {
  const std::size_t n = y.rows();
  std::vector<char> out(n, 1);
  if (cal.k == 0) return out;

  if (variant == Variant::TauAdaptiveGlobal || variant == Variant::TauAdaptiveKnn) {
    const Matrix ctx = flow->context_dim() > 0 ? x : Matrix(n, 0);
    const std::vector<double> ll = flow->log_likelihood_batch(y, ctx);
    if (flow->context_dim() == 0) {
      const double t = threshold({});
      for (std::size_t i = 0; i < n; ++i) out[i] = ll[i] >= t ? 1 : 0;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const std::span<const double> xi{x.row(i), x.cols()};
        out[i] = ll[i] >= threshold(xi) ? 1 : 0;
      }
    }
    return out;
  }

  const std::vector<double> scores = conformity_scores(variant, *flow, predictor.get(), x, y);
  for (std::size_t i = 0; i < n; ++i) out[i] = scores[i] >= cal.tau ? 1 : 0;
  return out;
}

}  // namespace japan
