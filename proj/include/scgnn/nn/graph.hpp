#pragma once

#include "scgnn/adjacency.hpp"
#include "scgnn/common.hpp"
#include "scgnn/nn/layers.hpp"

#include <Eigen/Eigenvalues>

#include <memory>
#include <string>
#include <vector>

namespace scgnn {
namespace nn {

/// Graph operators shared by every sample in a batch, precomputed once from
/// the station proximity weights.
struct GraphContext {
  Matrix norm_adj;          // D^-1/2 A D^-1/2
  Matrix scaled_laplacian;  // 2 L / lambda_max - I, L = I - norm_adj
  Matrix transition;        // D^-1 A (row-stochastic)
  Eigen::MatrixXi neighbor; // A(i,j) > 0
  double lambda_max = 2.0;

  int size() const { return static_cast<int>(norm_adj.rows()); }
};

inline GraphContext make_graph_context(const Matrix& weights) {
  const int n = static_cast<int>(weights.rows());
  if (weights.cols() != n) throw DataError("adjacency must be square");
  GraphContext g;
  Vector deg = weights.rowwise().sum();
  Vector dis(n), dinv(n);
  for (int i = 0; i < n; ++i) {
    if (deg(i) <= 0.0) throw DataError("graph has an isolated all-zero row");
    dis(i) = 1.0 / std::sqrt(deg(i));
    dinv(i) = 1.0 / deg(i);
  }
  g.norm_adj = dis.asDiagonal() * weights * dis.asDiagonal();
  g.transition = dinv.asDiagonal() * weights;
  const Matrix lap = Matrix::Identity(n, n) - g.norm_adj;
  Eigen::SelfAdjointEigenSolver<Matrix> es(lap);
  const double lmax = es.eigenvalues().maxCoeff();
  g.lambda_max = lmax > 1e-9 ? lmax : 2.0;
  g.scaled_laplacian = (2.0 / g.lambda_max) * lap - Matrix::Identity(n, n);
  g.neighbor.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.neighbor(i, j) = weights(i, j) > 0.0 ? 1 : 0;
  return g;
}

inline GraphContext make_graph_context(const AdjacencyMatrix& a) {
  return make_graph_context(a.weights);
}

/// Common interface for node-feature layers. X stacks B per-sample blocks of
/// N rows each; the same graph applies to every block.
class GraphLayer {
 public:
  virtual ~GraphLayer() = default;
  virtual Matrix forward(const Matrix& x, int batch, const GraphContext& g) = 0;
  virtual Matrix backward(const Matrix& grad, int batch, const GraphContext& g) = 0;
  virtual std::vector<Param*> params() = 0;
  virtual int out_dim() const = 0;
};

// ---------------------------------------------------------------------------
// Chebyshev spectral convolution of polynomial order K:
//   out = sum_{j=0..K} T_j(L_hat) X W_j + b
// with the usual recurrence T_0 = I, T_1 = L_hat, T_j = 2 L_hat T_{j-1} - T_{j-2}.
// ---------------------------------------------------------------------------

class ChebyshevConv : public GraphLayer {
 public:
  ChebyshevConv(const std::string& name, int in, int out, int order, Rng& rng)
      : b_(name + ".b", 1, out), in_(in), out_(out), order_(order) {
    if (order < 0) throw UsageError("chebyshev order must be >= 0");
    for (int j = 0; j <= order; ++j) {
      w_.emplace_back(std::make_unique<Param>(
          name + ".w" + std::to_string(j), in, out));
      glorot_init(*w_[j], in, out, rng);
    }
  }

  Matrix forward(const Matrix& x, int batch, const GraphContext& g) override {
    const int n = g.size();
    terms_.assign(order_ + 1, Matrix());
    terms_[0] = x;
    if (order_ >= 1) {
      terms_[1].resizeLike(x);
      for (int bidx = 0; bidx < batch; ++bidx)
        terms_[1].middleRows(bidx * n, n) =
            g.scaled_laplacian * x.middleRows(bidx * n, n);
    }
    for (int j = 2; j <= order_; ++j) {
      terms_[j].resizeLike(x);
      for (int bidx = 0; bidx < batch; ++bidx)
        terms_[j].middleRows(bidx * n, n) =
            2.0 * g.scaled_laplacian * terms_[j - 1].middleRows(bidx * n, n) -
            terms_[j - 2].middleRows(bidx * n, n);
    }
    Matrix out = terms_[0] * w_[0]->value;
    for (int j = 1; j <= order_; ++j) out += terms_[j] * w_[j]->value;
    out.rowwise() += b_.value.row(0);
    return out;
  }

  Matrix backward(const Matrix& grad, int batch, const GraphContext& g) override {
    const int n = g.size();
    b_.grad.row(0) += grad.colwise().sum();
    std::vector<Matrix> dterm(order_ + 1);
    for (int j = 0; j <= order_; ++j) {
      w_[j]->grad += terms_[j].transpose() * grad;
      dterm[j] = grad * w_[j]->value.transpose();
    }
    // adjoint of the recurrence (L_hat is symmetric)
    for (int j = order_; j >= 2; --j) {
      for (int bidx = 0; bidx < batch; ++bidx)
        dterm[j - 1].middleRows(bidx * n, n) +=
            2.0 * g.scaled_laplacian * dterm[j].middleRows(bidx * n, n);
      dterm[j - 2] -= dterm[j];
    }
    Matrix dx = dterm[0];
    if (order_ >= 1)
      for (int bidx = 0; bidx < batch; ++bidx)
        dx.middleRows(bidx * n, n) +=
            g.scaled_laplacian * dterm[1].middleRows(bidx * n, n);
    return dx;
  }

  std::vector<Param*> params() override {
    std::vector<Param*> p;
    for (auto& w : w_) p.push_back(w.get());
    p.push_back(&b_);
    return p;
  }

  int out_dim() const override { return out_; }

 private:
  std::vector<std::unique_ptr<Param>> w_;
  Param b_;
  int in_, out_, order_;
  std::vector<Matrix> terms_;
};

// ---------------------------------------------------------------------------
// Graph convolution with a separately parameterized skip transform:
//   out = A_hat X W1 + X W2 + b
// ---------------------------------------------------------------------------

class GraphSkipConv : public GraphLayer {
 public:
  GraphSkipConv(const std::string& name, int in, int out, Rng& rng)
      : w1_(name + ".w1", in, out), w2_(name + ".w2", in, out),
        b_(name + ".b", 1, out), out_(out) {
    glorot_init(w1_, in, out, rng);
    glorot_init(w2_, in, out, rng);
  }

  Matrix forward(const Matrix& x, int batch, const GraphContext& g) override {
    const int n = g.size();
    x_ = x;
    ax_.resizeLike(x);
    for (int bidx = 0; bidx < batch; ++bidx)
      ax_.middleRows(bidx * n, n) = g.norm_adj * x.middleRows(bidx * n, n);
    Matrix out = ax_ * w1_.value + x * w2_.value;
    out.rowwise() += b_.value.row(0);
    return out;
  }

  Matrix backward(const Matrix& grad, int batch, const GraphContext& g) override {
    const int n = g.size();
    w1_.grad += ax_.transpose() * grad;
    w2_.grad += x_.transpose() * grad;
    b_.grad.row(0) += grad.colwise().sum();
    const Matrix gw1 = grad * w1_.value.transpose();
    Matrix dx = grad * w2_.value.transpose();
    for (int bidx = 0; bidx < batch; ++bidx)
      dx.middleRows(bidx * n, n) += g.norm_adj * gw1.middleRows(bidx * n, n);
    return dx;
  }

  std::vector<Param*> params() override { return {&w1_, &w2_, &b_}; }
  int out_dim() const override { return out_; }

 private:
  Param w1_, w2_, b_;
  int out_;
  Matrix x_, ax_;
};

/// Plain spectral aggregation: out = A_hat X W + b.
class GraphConv : public GraphLayer {
 public:
  GraphConv(const std::string& name, int in, int out, Rng& rng)
      : w_(name + ".w", in, out), b_(name + ".b", 1, out), out_(out) {
    glorot_init(w_, in, out, rng);
  }

  Matrix forward(const Matrix& x, int batch, const GraphContext& g) override {
    const int n = g.size();
    ax_.resizeLike(x);
    for (int bidx = 0; bidx < batch; ++bidx)
      ax_.middleRows(bidx * n, n) = g.norm_adj * x.middleRows(bidx * n, n);
    Matrix out = ax_ * w_.value;
    out.rowwise() += b_.value.row(0);
    return out;
  }

  Matrix backward(const Matrix& grad, int batch, const GraphContext& g) override {
    const int n = g.size();
    w_.grad += ax_.transpose() * grad;
    b_.grad.row(0) += grad.colwise().sum();
    const Matrix gw = grad * w_.value.transpose();
    Matrix dx(gw.rows(), gw.cols());
    for (int bidx = 0; bidx < batch; ++bidx)
      dx.middleRows(bidx * n, n) = g.norm_adj * gw.middleRows(bidx * n, n);
    return dx;
  }

  std::vector<Param*> params() override { return {&w_, &b_}; }
  int out_dim() const override { return out_; }

 private:
  Param w_, b_;
  int out_;
  Matrix ax_;
};

// ---------------------------------------------------------------------------
// Diffusion convolution over the row-stochastic transition matrix:
//   out = sum_{k=0..K} P^k X W_k + b
// ---------------------------------------------------------------------------

class DiffusionConv : public GraphLayer {
 public:
  DiffusionConv(const std::string& name, int in, int out, int hops, Rng& rng)
      : b_(name + ".b", 1, out), out_(out), hops_(hops) {
    if (hops < 0) throw UsageError("diffusion hops must be >= 0");
    for (int k = 0; k <= hops; ++k) {
      w_.emplace_back(std::make_unique<Param>(name + ".w" + std::to_string(k), in, out));
      glorot_init(*w_[k], in, out, rng);
    }
  }

  Matrix forward(const Matrix& x, int batch, const GraphContext& g) override {
    const int n = g.size();
    terms_.assign(hops_ + 1, Matrix());
    terms_[0] = x;
    for (int k = 1; k <= hops_; ++k) {
      terms_[k].resizeLike(x);
      for (int bidx = 0; bidx < batch; ++bidx)
        terms_[k].middleRows(bidx * n, n) =
            g.transition * terms_[k - 1].middleRows(bidx * n, n);
    }
    Matrix out = terms_[0] * w_[0]->value;
    for (int k = 1; k <= hops_; ++k) out += terms_[k] * w_[k]->value;
    out.rowwise() += b_.value.row(0);
    return out;
  }

  Matrix backward(const Matrix& grad, int batch, const GraphContext& g) override {
    const int n = g.size();
    b_.grad.row(0) += grad.colwise().sum();
    const Matrix pt = g.transition.transpose();
    Matrix dx = Matrix::Zero(grad.rows(), w_[0]->value.rows());
    for (int k = hops_; k >= 0; --k) {
      w_[k]->grad += terms_[k].transpose() * grad;
      Matrix acc = grad * w_[k]->value.transpose();
      for (int step = 0; step < k; ++step)
        for (int bidx = 0; bidx < batch; ++bidx)
          acc.middleRows(bidx * n, n) =
              (pt * acc.middleRows(bidx * n, n)).eval();
      dx += acc;
    }
    return dx;
  }

  std::vector<Param*> params() override {
    std::vector<Param*> p;
    for (auto& w : w_) p.push_back(w.get());
    p.push_back(&b_);
    return p;
  }

  int out_dim() const override { return out_; }

 private:
  std::vector<std::unique_ptr<Param>> w_;
  Param b_;
  int out_, hops_;
  std::vector<Matrix> terms_;
};

// ---------------------------------------------------------------------------
// Single-head graph attention over the adjacency support:
//   h = X W,  e_ij = leakyrelu(a_src . h_i + a_dst . h_j)  for neighbors j,
//   alpha_i = softmax_j(e_ij),  out_i = sum_j alpha_ij h_j + b
// ---------------------------------------------------------------------------

class GraphAttention : public GraphLayer {
 public:
  static constexpr double kLeakySlope = 0.2;

  GraphAttention(const std::string& name, int in, int out, Rng& rng)
      : w_(name + ".w", in, out), a_src_(name + ".a_src", 1, out),
        a_dst_(name + ".a_dst", 1, out), b_(name + ".b", 1, out), out_(out) {
    glorot_init(w_, in, out, rng);
    glorot_init(a_src_, out, 1, rng);
    glorot_init(a_dst_, out, 1, rng);
  }

  Matrix forward(const Matrix& x, int batch, const GraphContext& g) override {
    const int n = g.size();
    x_ = x;
    h_ = x * w_.value;
    alpha_.assign(batch, Matrix());
    score_.assign(batch, Matrix());
    Matrix out(x.rows(), out_);
    for (int bidx = 0; bidx < batch; ++bidx) {
      const auto hb = h_.middleRows(bidx * n, n);
      const Vector src = hb * a_src_.value.row(0).transpose();
      const Vector dst = hb * a_dst_.value.row(0).transpose();
      Matrix& s = score_[bidx];
      Matrix& al = alpha_[bidx];
      s.setZero(n, n);
      al.setZero(n, n);
      for (int i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
          if (!g.neighbor(i, j)) continue;
          s(i, j) = src(i) + dst(j);
          const double e = s(i, j) > 0 ? s(i, j) : kLeakySlope * s(i, j);
          mx = std::max(mx, e);
        }
        double denom = 0.0;
        for (int j = 0; j < n; ++j) {
          if (!g.neighbor(i, j)) continue;
          const double e = s(i, j) > 0 ? s(i, j) : kLeakySlope * s(i, j);
          al(i, j) = std::exp(e - mx);
          denom += al(i, j);
        }
        for (int j = 0; j < n; ++j) al(i, j) /= denom;
      }
      out.middleRows(bidx * n, n) = al * hb;
    }
    out.rowwise() += b_.value.row(0);
    return out;
  }

  Matrix backward(const Matrix& grad, int batch, const GraphContext& g) override {
    const int n = g.size();
    b_.grad.row(0) += grad.colwise().sum();
    Matrix dh = Matrix::Zero(h_.rows(), out_);
    for (int bidx = 0; bidx < batch; ++bidx) {
      const auto hb = h_.middleRows(bidx * n, n);
      const auto gb = grad.middleRows(bidx * n, n);
      const Matrix& al = alpha_[bidx];
      const Matrix& s = score_[bidx];
      // out_i = sum_j alpha_ij h_j
      dh.middleRows(bidx * n, n) += al.transpose() * gb;
      const Matrix dalpha = gb * hb.transpose();  // (i,j)
      Matrix ds(n, n);
      for (int i = 0; i < n; ++i) {
        double dot = 0.0;
        for (int j = 0; j < n; ++j)
          if (g.neighbor(i, j)) dot += al(i, j) * dalpha(i, j);
        for (int j = 0; j < n; ++j) {
          if (!g.neighbor(i, j)) {
            ds(i, j) = 0.0;
            continue;
          }
          const double de = al(i, j) * (dalpha(i, j) - dot);
          ds(i, j) = de * (s(i, j) > 0 ? 1.0 : kLeakySlope);
        }
      }
      const Vector row_sum = ds.rowwise().sum();
      const Vector col_sum = ds.colwise().sum().transpose();
      a_src_.grad.row(0) += (row_sum.transpose() * hb);
      a_dst_.grad.row(0) += (col_sum.transpose() * hb);
      dh.middleRows(bidx * n, n) +=
          row_sum * a_src_.value.row(0) + col_sum * a_dst_.value.row(0);
    }
    w_.grad += x_.transpose() * dh;
    return dh * w_.value.transpose();
  }

  std::vector<Param*> params() override { return {&w_, &a_src_, &a_dst_, &b_}; }
  int out_dim() const override { return out_; }

 private:
  Param w_, a_src_, a_dst_, b_;
  int out_;
  Matrix x_, h_;
  std::vector<Matrix> alpha_, score_;
};

// ---------------------------------------------------------------------------
// Gated attention readout producing one context vector per sample:
//   context = sum_i sigmoid(x_i Wg + bg) * (x_i Wv + bv)
// ---------------------------------------------------------------------------

class GlobalAttentionPool {
 public:
  GlobalAttentionPool(const std::string& name, int in, int channels, Rng& rng)
      : wg_(name + ".wg", in, channels), bg_(name + ".bg", 1, channels),
        wv_(name + ".wv", in, channels), bv_(name + ".bv", 1, channels),
        channels_(channels) {
    glorot_init(wg_, in, channels, rng);
    glorot_init(wv_, in, channels, rng);
  }

  /// x: (B*N) x F -> context: B x channels
  Matrix forward(const Matrix& x, int batch, int n) {
    x_ = x;
    pre_gate_ = x * wg_.value;
    pre_gate_.rowwise() += bg_.value.row(0);
    gate_ = apply_activation(Activation::kSigmoid, pre_gate_);
    val_ = x * wv_.value;
    val_.rowwise() += bv_.value.row(0);
    Matrix ctx = Matrix::Zero(batch, channels_);
    for (int bidx = 0; bidx < batch; ++bidx)
      ctx.row(bidx) =
          (gate_.middleRows(bidx * n, n).array() * val_.middleRows(bidx * n, n).array())
              .colwise().sum();
    return ctx;
  }

  Matrix backward(const Matrix& gctx, int batch, int n) {
    Matrix dgate(gate_.rows(), channels_), dval(val_.rows(), channels_);
    for (int bidx = 0; bidx < batch; ++bidx) {
      for (int i = 0; i < n; ++i) {
        dgate.row(bidx * n + i) =
            gctx.row(bidx).cwiseProduct(val_.row(bidx * n + i));
        dval.row(bidx * n + i) =
            gctx.row(bidx).cwiseProduct(gate_.row(bidx * n + i));
      }
    }
    const Matrix dpre_gate = activation_backward(Activation::kSigmoid, pre_gate_, dgate);
    wg_.grad += x_.transpose() * dpre_gate;
    bg_.grad.row(0) += dpre_gate.colwise().sum();
    wv_.grad += x_.transpose() * dval;
    bv_.grad.row(0) += dval.colwise().sum();
    return dpre_gate * wg_.value.transpose() + dval * wv_.value.transpose();
  }

  std::vector<Param*> params() { return {&wg_, &bg_, &wv_, &bv_}; }
  int channels() const { return channels_; }

 private:
  Param wg_, bg_, wv_, bv_;
  int channels_;
  Matrix x_, pre_gate_, gate_, val_;
};

}  // namespace nn
}  // namespace scgnn
