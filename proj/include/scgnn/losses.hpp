#pragma once

#include "scgnn/augment.hpp"
#include "scgnn/common.hpp"

#include <cmath>
#include <vector>

namespace scgnn {

struct LossConfig {
  double temperature = 0.1;  // contrastive temperature
  // weights for: correlation, Huber, MSE, MAE, asymmetric Huber
  double w_correlation = 0.002;
  double w_huber = 1.0;
  double w_mse = 0.0096;
  double w_mae = 0.002;
  double w_asym_huber = 0.0032;
  double huber_delta = 1.0;
  double underestimate_factor = 2.0;  // multiplies Huber terms where pred < target

  void validate() const {
    if (temperature <= 0.0) throw UsageError("loss temperature must be positive");
    if (huber_delta <= 0.0) throw UsageError("huber delta must be positive");
    if (underestimate_factor <= 1.0)
      throw UsageError("underestimation factor must exceed 1");
    for (double w : {w_correlation, w_huber, w_mse, w_mae, w_asym_huber})
      if (w < 0.0) throw UsageError("loss weights must be non-negative");
  }
};

struct ContrastiveLossResult {
  double value = 0.0;
  Matrix grad;  // d loss / d raw projections, one row per sample
};

/// Normalized-projection contrastive loss over an even batch of adjacent
/// (original, augmentation) pairs:
///   L = sum_m -log( exp(z_m.z_m' / tau) / sum_{a != m} exp(z_m.z_a / tau) )
/// Rows of `projections` are the raw per-sample vectors (stacked station
/// projections); they are L2-normalized internally.
inline ContrastiveLossResult contrastive_loss(const Matrix& projections,
                                              const ContrastiveBatch& layout,
                                              double temperature,
                                              bool with_grad = true) {
  const int m_count = static_cast<int>(projections.rows());
  if (m_count != layout.size())
    throw UsageError("projection count does not match batch layout");
  if (m_count < 2 || m_count % 2 != 0)
    throw UsageError("contrastive batch size must be even and >= 2");
  if (temperature <= 0.0) throw UsageError("temperature must be positive");

  const double eps = 1e-12;
  Matrix z(m_count, projections.cols());
  Vector norms(m_count);
  for (int m = 0; m < m_count; ++m) {
    norms(m) = std::max(projections.row(m).norm(), eps);
    z.row(m) = projections.row(m) / norms(m);
  }

  const Matrix sims = (z * z.transpose()) / temperature;

  // q(m, a) = softmax over candidates a != m of sims(m, a)
  Matrix q = Matrix::Zero(m_count, m_count);
  double loss = 0.0;
  for (int m = 0; m < m_count; ++m) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < m_count; ++a)
      if (a != m) mx = std::max(mx, sims(m, a));
    double denom = 0.0;
    for (int a = 0; a < m_count; ++a)
      if (a != m) denom += std::exp(sims(m, a) - mx);
    for (int a = 0; a < m_count; ++a)
      if (a != m) q(m, a) = std::exp(sims(m, a) - mx) / denom;
    loss += -sims(m, layout.partner(m)) + mx + std::log(denom);
  }

  ContrastiveLossResult r;
  r.value = loss;
  if (!with_grad) return r;

  // d loss / d z_m = (1/tau) [ sum_{a != m} (q(m,a) + q(a,m)) z_a - 2 z_partner ]
  Matrix gz = Matrix::Zero(m_count, projections.cols());
  for (int m = 0; m < m_count; ++m) {
    for (int a = 0; a < m_count; ++a)
      if (a != m) gz.row(m) += (q(m, a) + q(a, m)) * z.row(a);
    gz.row(m) -= 2.0 * z.row(layout.partner(m));
    gz.row(m) /= temperature;
  }
  // back through the L2 normalization
  r.grad.resize(m_count, projections.cols());
  for (int m = 0; m < m_count; ++m) {
    const double dot = gz.row(m).dot(z.row(m));
    r.grad.row(m) = (gz.row(m) - dot * z.row(m)) / norms(m);
  }
  return r;
}

struct RegressionLossResult {
  double value = 0.0;
  Vector grad;  // d loss / d pred
  double pearson_r = 0.0;
  bool correlation_degenerate = false;
};

inline double huber(double e, double delta) {
  const double a = std::abs(e);
  return a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

inline double huber_derivative(double e, double delta) {
  if (std::abs(e) <= delta) return e;
  return e > 0 ? delta : -delta;
}

/// Composite regression loss: weighted sum of (1 - r^2), mean Huber, mean
/// squared error, mean absolute error, and an asymmetric mean Huber that
/// multiplies underestimating elements (pred < target) by a factor > 1.
inline RegressionLossResult regression_loss(const Vector& pred,
                                            const Vector& target,
                                            const LossConfig& cfg,
                                            bool with_grad = true) {
  cfg.validate();
  const int n = static_cast<int>(pred.size());
  if (n != target.size()) throw UsageError("pred/target length mismatch");
  if (n < 2) throw UsageError("regression loss needs at least 2 elements");

  const Vector err = pred - target;
  const double inv_n = 1.0 / n;

  double sum_huber = 0.0, sum_sq = 0.0, sum_abs = 0.0, sum_asym = 0.0;
  for (int i = 0; i < n; ++i) {
    const double h = huber(err(i), cfg.huber_delta);
    sum_huber += h;
    sum_sq += err(i) * err(i);
    sum_abs += std::abs(err(i));
    sum_asym += (err(i) < 0.0 ? cfg.underestimate_factor : 1.0) * h;
  }

  RegressionLossResult r;

  // Pearson correlation between pred and target. The squared correlation is
  // formed without square roots so that identical vectors give exactly 1.
  const double pm = pred.mean();
  const double tm = target.mean();
  const Vector u = pred.array() - pm;
  const Vector v = target.array() - tm;
  const double cross = u.dot(v);
  const double vp = u.squaredNorm();
  const double vo = v.squaredNorm();
  double corr_term;
  Vector corr_grad = Vector::Zero(n);
  if (vp < 1e-24 || vo < 1e-24) {
    r.correlation_degenerate = true;
    r.pearson_r = 0.0;
    corr_term = 1.0;
  } else {
    const double rho2 = (cross * cross) / (vp * vo);
    r.pearson_r = (cross >= 0 ? 1.0 : -1.0) * std::sqrt(rho2);
    corr_term = 1.0 - rho2;
    if (with_grad)
      corr_grad = -(2.0 * cross / (vp * vo)) * (v - (cross / vp) * u);
  }

  r.value = cfg.w_correlation * corr_term + cfg.w_huber * sum_huber * inv_n +
            cfg.w_mse * sum_sq * inv_n + cfg.w_mae * sum_abs * inv_n +
            cfg.w_asym_huber * sum_asym * inv_n;

  if (with_grad) {
    r.grad.resize(n);
    for (int i = 0; i < n; ++i) {
      const double hd = huber_derivative(err(i), cfg.huber_delta);
      const double asym_f = err(i) < 0.0 ? cfg.underestimate_factor : 1.0;
      const double sgn = err(i) > 0.0 ? 1.0 : (err(i) < 0.0 ? -1.0 : 0.0);
      r.grad(i) = cfg.w_correlation * corr_grad(i) +
                  inv_n * (cfg.w_huber * hd + cfg.w_mse * 2.0 * err(i) +
                           cfg.w_mae * sgn + cfg.w_asym_huber * asym_f * hd);
    }
  }
  return r;
}

inline double hybrid_loss(double contrastive, double regression) {
  return contrastive + regression;
}

}  // namespace scgnn
