#pragma once

#include "scgnn/common.hpp"
#include "scgnn/rng.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace scgnn {
namespace nn {

/// A named learnable array. Biases and vectors are stored as 1 x n.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  bool frozen = false;
  bool learnable = true;  // false for running statistics

  Param(std::string n, int rows, int cols, bool learn = true)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)), learnable(learn) {}

  long size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

inline void glorot_init(Param& p, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (long i = 0; i < p.value.size(); ++i)
    p.value.data()[i] = rng.uniform(-limit, limit);
}

/// Batch of per-station time series, one (length x channels) matrix per
/// (sample, station) unit.
using SeqBatch = std::vector<Matrix>;

enum class Activation { kLinear, kRelu, kSwish, kSigmoid };

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::kLinear: return x;
    case Activation::kRelu: return x > 0 ? x : 0.0;
    case Activation::kSwish: return x / (1.0 + std::exp(-x));
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

inline double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::kLinear: return 1.0;
    case Activation::kRelu: return x > 0 ? 1.0 : 0.0;
    case Activation::kSwish: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 + x * (1.0 - s));
    }
    case Activation::kSigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

inline Matrix apply_activation(Activation a, const Matrix& x) {
  if (a == Activation::kLinear) return x;
  Matrix y(x.rows(), x.cols());
  for (long i = 0; i < x.size(); ++i) y.data()[i] = activate(a, x.data()[i]);
  return y;
}

inline Matrix activation_backward(Activation a, const Matrix& x, const Matrix& g) {
  if (a == Activation::kLinear) return g;
  Matrix dx(x.rows(), x.cols());
  for (long i = 0; i < x.size(); ++i)
    dx.data()[i] = g.data()[i] * activate_derivative(a, x.data()[i]);
  return dx;
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

class Dense {
 public:
  Dense(const std::string& name, int in, int out, Activation act, Rng& rng)
      : w_(name + ".w", in, out), b_(name + ".b", 1, out), act_(act) {
    glorot_init(w_, in, out, rng);
  }

  Matrix forward(const Matrix& x) {
    x_ = x;
    pre_ = x * w_.value;
    pre_.rowwise() += b_.value.row(0);
    return apply_activation(act_, pre_);
  }

  Matrix backward(const Matrix& g) {
    const Matrix gp = activation_backward(act_, pre_, g);
    w_.grad += x_.transpose() * gp;
    b_.grad.row(0) += gp.colwise().sum();
    return gp * w_.value.transpose();
  }

  std::vector<Param*> params() { return {&w_, &b_}; }
  int out_dim() const { return static_cast<int>(w_.value.cols()); }

 private:
  Param w_, b_;
  Activation act_;
  Matrix x_, pre_;
};

// ---------------------------------------------------------------------------
// Batch normalization over the channel axis. Normalizes each column
// (channel/unit) across all rows of the batch; for sequence batches the
// pooled axis spans every (unit, time) row. Uses batch statistics while
// training and running averages at inference.
// ---------------------------------------------------------------------------

class BatchNorm {
 public:
  static constexpr double kEps = 1e-3;
  static constexpr double kMomentum = 0.9;

  BatchNorm(const std::string& name, int channels)
      : gamma_(name + ".gamma", 1, channels),
        beta_(name + ".beta", 1, channels),
        run_mean_(name + ".run_mean", 1, channels, /*learn=*/false),
        run_var_(name + ".run_var", 1, channels, /*learn=*/false) {
    gamma_.value.setOnes();
    run_var_.value.setOnes();
  }

  // ---- feature-matrix path (rows x channels) ----

  Matrix forward(const Matrix& x, bool training) {
    if (!training) {
      Matrix y = x;
      for (int c = 0; c < x.cols(); ++c) {
        const double inv = 1.0 / std::sqrt(run_var_.value(0, c) + kEps);
        y.col(c) = (x.col(c).array() - run_mean_.value(0, c)) * inv *
                       gamma_.value(0, c) + beta_.value(0, c);
      }
      eval_mode_ = true;
      return y;
    }
    eval_mode_ = false;
    const auto rows = static_cast<double>(x.rows());
    mean_ = x.colwise().mean();
    Matrix centered = x.rowwise() - mean_.row(0);
    var_ = centered.array().square().colwise().sum() / rows;
    inv_std_.resize(1, x.cols());
    for (int c = 0; c < x.cols(); ++c)
      inv_std_(0, c) = 1.0 / std::sqrt(var_(0, c) + kEps);
    xhat_ = centered.array().rowwise() * inv_std_.row(0).array();
    update_running();
    Matrix y = xhat_.array().rowwise() * gamma_.value.row(0).array();
    y.rowwise() += beta_.value.row(0);
    return y;
  }

  Matrix backward(const Matrix& g) {
    if (eval_mode_) {
      Matrix dx = g;
      for (int c = 0; c < g.cols(); ++c)
        dx.col(c) *= gamma_.value(0, c) / std::sqrt(run_var_.value(0, c) + kEps);
      return dx;
    }
    gamma_.grad.row(0) += (g.array() * xhat_.array()).colwise().sum().matrix();
    beta_.grad.row(0) += g.colwise().sum();
    Matrix dx(g.rows(), g.cols());
    for (int c = 0; c < g.cols(); ++c) {
      const double gc = gamma_.value(0, c);
      const double mean_g = g.col(c).mean();
      const double mean_gx = (g.col(c).array() * xhat_.col(c).array()).mean();
      dx.col(c) = gc * inv_std_(0, c) *
                  (g.col(c).array() - mean_g - xhat_.col(c).array() * mean_gx);
    }
    return dx;
  }

  // ---- sequence-batch path: statistics pooled over (unit, time) ----

  void forward_seq(const SeqBatch& x, SeqBatch& y, bool training) {
    const int channels = static_cast<int>(gamma_.value.cols());
    y.resize(x.size());
    if (!training) {
      eval_mode_ = true;
      for (std::size_t u = 0; u < x.size(); ++u) {
        y[u].resize(x[u].rows(), channels);
        for (int c = 0; c < channels; ++c) {
          const double inv = 1.0 / std::sqrt(run_var_.value(0, c) + kEps);
          y[u].col(c) = (x[u].col(c).array() - run_mean_.value(0, c)) * inv *
                            gamma_.value(0, c) + beta_.value(0, c);
        }
      }
      return;
    }
    eval_mode_ = false;
    double count = 0.0;
    mean_ = Matrix::Zero(1, channels);
    for (const auto& m : x) {
      mean_.row(0) += m.colwise().sum();
      count += static_cast<double>(m.rows());
    }
    mean_ /= count;
    var_ = Matrix::Zero(1, channels);
    for (const auto& m : x)
      var_.row(0) += (m.rowwise() - mean_.row(0)).array().square().colwise().sum().matrix();
    var_ /= count;
    inv_std_.resize(1, channels);
    for (int c = 0; c < channels; ++c)
      inv_std_(0, c) = 1.0 / std::sqrt(var_(0, c) + kEps);
    update_running();
    count_ = count;
    xhat_seq_.resize(x.size());
    for (std::size_t u = 0; u < x.size(); ++u) {
      xhat_seq_[u] = (x[u].rowwise() - mean_.row(0)).array().rowwise() *
                     inv_std_.row(0).array();
      y[u] = xhat_seq_[u].array().rowwise() * gamma_.value.row(0).array();
      y[u].rowwise() += beta_.value.row(0);
    }
  }

  void backward_seq(const SeqBatch& g, SeqBatch& dx) {
    const int channels = static_cast<int>(gamma_.value.cols());
    dx.resize(g.size());
    if (eval_mode_) {
      for (std::size_t u = 0; u < g.size(); ++u) {
        dx[u] = g[u];
        for (int c = 0; c < channels; ++c)
          dx[u].col(c) *= gamma_.value(0, c) / std::sqrt(run_var_.value(0, c) + kEps);
      }
      return;
    }
    Matrix sum_g = Matrix::Zero(1, channels);
    Matrix sum_gx = Matrix::Zero(1, channels);
    for (std::size_t u = 0; u < g.size(); ++u) {
      sum_g.row(0) += g[u].colwise().sum();
      sum_gx.row(0) += (g[u].array() * xhat_seq_[u].array()).colwise().sum().matrix();
    }
    gamma_.grad += sum_gx;
    beta_.grad += sum_g;
    const Matrix mean_g = sum_g / count_;
    const Matrix mean_gx = sum_gx / count_;
    for (std::size_t u = 0; u < g.size(); ++u) {
      dx[u].resize(g[u].rows(), channels);
      for (int c = 0; c < channels; ++c) {
        dx[u].col(c) = gamma_.value(0, c) * inv_std_(0, c) *
                       (g[u].col(c).array() - mean_g(0, c) -
                        xhat_seq_[u].col(c).array() * mean_gx(0, c));
      }
    }
  }

  std::vector<Param*> params() { return {&gamma_, &beta_, &run_mean_, &run_var_}; }

 private:
  void update_running() {
    run_mean_.value = kMomentum * run_mean_.value + (1.0 - kMomentum) * mean_;
    run_var_.value = kMomentum * run_var_.value + (1.0 - kMomentum) * var_;
  }

  Param gamma_, beta_, run_mean_, run_var_;
  bool eval_mode_ = false;
  Matrix mean_, var_, inv_std_, xhat_;
  SeqBatch xhat_seq_;
  double count_ = 0.0;
};

// ---------------------------------------------------------------------------
// 1D convolution along the time axis, stride 1, with optional zero padding
// that preserves the length ("same"). Weights are (kernel * in) x out.
// ---------------------------------------------------------------------------

class Conv1D {
 public:
  Conv1D(const std::string& name, int in_channels, int out_channels, int kernel,
         bool same_padding, Activation act, Rng& rng)
      : w_(name + ".w", kernel * in_channels, out_channels),
        b_(name + ".b", 1, out_channels),
        in_(in_channels), out_(out_channels), k_(kernel), same_(same_padding),
        act_(act) {
    glorot_init(w_, static_cast<double>(kernel) * in_channels,
                static_cast<double>(kernel) * out_channels, rng);
  }

  int out_length(int in_length) const {
    const int len = same_ ? in_length : in_length - k_ + 1;
    if (len <= 0)
      throw UsageError("conv kernel " + std::to_string(k_) +
                       " too large for input length " + std::to_string(in_length));
    return len;
  }

  void forward(const SeqBatch& x, SeqBatch& y, bool /*training*/) {
    x_ = x;
    pre_.resize(x.size());
    y.resize(x.size());
    for (std::size_t u = 0; u < x.size(); ++u) {
      Matrix col;
      im2col(x[u], col);
      pre_[u] = col * w_.value;
      pre_[u].rowwise() += b_.value.row(0);
      y[u] = apply_activation(act_, pre_[u]);
    }
  }

  void backward(const SeqBatch& g, SeqBatch& dx) {
    dx.resize(g.size());
    for (std::size_t u = 0; u < g.size(); ++u) {
      const Matrix gp = activation_backward(act_, pre_[u], g[u]);
      Matrix col;
      im2col(x_[u], col);
      w_.grad += col.transpose() * gp;
      b_.grad.row(0) += gp.colwise().sum();
      const Matrix gcol = gp * w_.value.transpose();
      col2im(gcol, static_cast<int>(x_[u].rows()), dx[u]);
    }
  }

  std::vector<Param*> params() { return {&w_, &b_}; }

 private:
  int pad_left() const { return same_ ? (k_ - 1) / 2 : 0; }

  void im2col(const Matrix& x, Matrix& col) const {
    const int in_len = static_cast<int>(x.rows());
    const int out_len = out_length(in_len);
    const int pl = pad_left();
    col.setZero(out_len, k_ * in_);
    for (int t = 0; t < out_len; ++t) {
      for (int j = 0; j < k_; ++j) {
        const int src = t + j - pl;
        if (src < 0 || src >= in_len) continue;
        col.block(t, j * in_, 1, in_) = x.row(src);
      }
    }
  }

  void col2im(const Matrix& gcol, int in_len, Matrix& dx) const {
    const int out_len = static_cast<int>(gcol.rows());
    const int pl = pad_left();
    dx.setZero(in_len, in_);
    for (int t = 0; t < out_len; ++t) {
      for (int j = 0; j < k_; ++j) {
        const int src = t + j - pl;
        if (src < 0 || src >= in_len) continue;
        dx.row(src) += gcol.block(t, j * in_, 1, in_);
      }
    }
  }

  Param w_, b_;
  int in_, out_, k_;
  bool same_;
  Activation act_;
  SeqBatch x_, pre_;
};

// ---------------------------------------------------------------------------
// Max pooling (pool size == stride, valid). Ties keep the earliest sample.
// ---------------------------------------------------------------------------

class MaxPool1D {
 public:
  explicit MaxPool1D(int pool) : pool_(pool) {}

  int out_length(int in_length) const {
    const int len = in_length / pool_;
    if (len <= 0)
      throw UsageError("pool size " + std::to_string(pool_) +
                       " too large for input length " + std::to_string(in_length));
    return len;
  }

  void forward(const SeqBatch& x, SeqBatch& y) {
    argmax_.resize(x.size());
    in_len_.resize(x.size());
    y.resize(x.size());
    for (std::size_t u = 0; u < x.size(); ++u) {
      const int in_len = static_cast<int>(x[u].rows());
      const int channels = static_cast<int>(x[u].cols());
      const int out_len = out_length(in_len);
      in_len_[u] = in_len;
      y[u].resize(out_len, channels);
      argmax_[u].resize(out_len, channels);
      for (int o = 0; o < out_len; ++o) {
        for (int c = 0; c < channels; ++c) {
          int best = o * pool_;
          double bv = x[u](best, c);
          for (int j = 1; j < pool_; ++j) {
            const double v = x[u](o * pool_ + j, c);
            if (v > bv) {
              bv = v;
              best = o * pool_ + j;
            }
          }
          y[u](o, c) = bv;
          argmax_[u](o, c) = best;
        }
      }
    }
  }

  void backward(const SeqBatch& g, SeqBatch& dx) {
    dx.resize(g.size());
    for (std::size_t u = 0; u < g.size(); ++u) {
      dx[u].setZero(in_len_[u], g[u].cols());
      for (int o = 0; o < g[u].rows(); ++o)
        for (int c = 0; c < g[u].cols(); ++c)
          dx[u](argmax_[u](o, c), c) += g[u](o, c);
    }
  }

 private:
  int pool_;
  std::vector<Eigen::MatrixXi> argmax_;
  std::vector<int> in_len_;
};

// ---------------------------------------------------------------------------
// Inverted dropout. Identity when rate is zero or at inference.
// ---------------------------------------------------------------------------

class Dropout {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw UsageError("dropout rate must be in [0,1)");
  }

  Matrix forward(const Matrix& x, bool training, Rng* rng) {
    if (!training || rate_ == 0.0) {
      active_ = false;
      return x;
    }
    active_ = true;
    mask_.resize(x.rows(), x.cols());
    const double scale = 1.0 / (1.0 - rate_);
    for (long i = 0; i < mask_.size(); ++i)
      mask_.data()[i] = rng->uniform() < rate_ ? 0.0 : scale;
    return x.cwiseProduct(mask_);
  }

  Matrix backward(const Matrix& g) const {
    return active_ ? g.cwiseProduct(mask_).eval() : g;
  }

  void forward_seq(const SeqBatch& x, SeqBatch& y, bool training, Rng* rng) {
    y.resize(x.size());
    if (!training || rate_ == 0.0) {
      active_ = false;
      y = x;
      return;
    }
    active_ = true;
    mask_seq_.resize(x.size());
    const double scale = 1.0 / (1.0 - rate_);
    for (std::size_t u = 0; u < x.size(); ++u) {
      mask_seq_[u].resize(x[u].rows(), x[u].cols());
      for (long i = 0; i < mask_seq_[u].size(); ++i)
        mask_seq_[u].data()[i] = rng->uniform() < rate_ ? 0.0 : scale;
      y[u] = x[u].cwiseProduct(mask_seq_[u]);
    }
  }

  void backward_seq(const SeqBatch& g, SeqBatch& dx) const {
    dx.resize(g.size());
    for (std::size_t u = 0; u < g.size(); ++u)
      dx[u] = active_ ? g[u].cwiseProduct(mask_seq_[u]).eval() : g[u];
  }

 private:
  double rate_;
  bool active_ = false;
  Matrix mask_;
  SeqBatch mask_seq_;
};

/// Row-major flatten of each (length x channels) unit into one feature row.
inline Matrix flatten_seq(const SeqBatch& x) {
  if (x.empty()) return Matrix();
  const long len = x[0].rows(), ch = x[0].cols();
  Matrix out(static_cast<long>(x.size()), len * ch);
  for (std::size_t u = 0; u < x.size(); ++u)
    for (long t = 0; t < len; ++t)
      for (long c = 0; c < ch; ++c) out(static_cast<long>(u), t * ch + c) = x[u](t, c);
  return out;
}

inline void unflatten_seq(const Matrix& g, long len, long ch, SeqBatch& dx) {
  dx.resize(static_cast<std::size_t>(g.rows()));
  for (long u = 0; u < g.rows(); ++u) {
    dx[static_cast<std::size_t>(u)].resize(len, ch);
    for (long t = 0; t < len; ++t)
      for (long c = 0; c < ch; ++c)
        dx[static_cast<std::size_t>(u)](t, c) = g(u, t * ch + c);
  }
}

}  // namespace nn
}  // namespace scgnn
