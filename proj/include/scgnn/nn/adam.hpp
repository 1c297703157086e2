#pragma once

#include "scgnn/nn/layers.hpp"

#include <vector>

namespace scgnn {
namespace nn {

/// Adam with the conventional defaults. Frozen or non-learnable parameters
/// are skipped entirely, so their values stay bit-identical.
class Adam {
 public:
  explicit Adam(std::vector<Param*> params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const Param* p : params_) {
      m_.emplace_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.emplace_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param* p = params_[i];
      if (p->frozen || !p->learnable) continue;
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p->grad;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
      const Matrix mhat = m_[i] / bc1;
      const Matrix vhat = v_[i] / bc2;
      p->value -= lr * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
    }
  }

  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double epsilon() const { return eps_; }

 private:
  std::vector<Param*> params_;
  std::vector<Matrix> m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace nn
}  // namespace scgnn
