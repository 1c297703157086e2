#pragma once

#include "scgnn/config.hpp"
#include "scgnn/nn/graph.hpp"
#include "scgnn/nn/layers.hpp"

#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace scgnn {
namespace nn {

struct GnnLayerSpec {
  enum class Type { kChebyshev, kGraphSkip, kGraphConv, kDiffusion, kAttention };
  Type type = Type::kChebyshev;
  int channels = 256;
  int order = 1;  // chebyshev order / diffusion hops

  static GnnLayerSpec parse(const std::string& s) {
    GnnLayerSpec spec;
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(csv::trim(item));
    if (parts.empty()) throw UsageError("empty gnn layer descriptor");
    const std::string& t = parts[0];
    if (t == "cheb") spec.type = Type::kChebyshev;
    else if (t == "gcs") spec.type = Type::kGraphSkip;
    else if (t == "gcn") spec.type = Type::kGraphConv;
    else if (t == "diff") spec.type = Type::kDiffusion;
    else if (t == "gat") spec.type = Type::kAttention;
    else throw UsageError("unknown gnn layer type '" + t + "'");
    if (parts.size() > 1) spec.channels = static_cast<int>(csv::to_long(parts[1], "gnn stack"));
    if (parts.size() > 2) spec.order = static_cast<int>(csv::to_long(parts[2], "gnn stack"));
    return spec;
  }

  std::string serialize() const {
    std::string t;
    switch (type) {
      case Type::kChebyshev: t = "cheb"; break;
      case Type::kGraphSkip: t = "gcs"; break;
      case Type::kGraphConv: t = "gcn"; break;
      case Type::kDiffusion: t = "diff"; break;
      case Type::kAttention: t = "gat"; break;
    }
    std::string out = t + ":" + std::to_string(channels);
    if (type == Type::kChebyshev || type == Type::kDiffusion)
      out += ":" + std::to_string(order);
    return out;
  }
};

struct ConvBlockSpec {
  int filters1 = 16, filters2 = 16;
  int kernel1 = 50, kernel2 = 25;
  int pool = 4;
  bool same_padding = false;
  double dropout = 0.10;
};

struct ModelConfig {
  int n_samples = 3000;
  int n_components = kComponents;
  std::vector<ConvBlockSpec> blocks = {
      {16, 16, 50, 25, 4, true, 0.10},
      {24, 24, 12, 12, 6, false, 0.10},
      {48, 96, 4, 4, 12, false, 0.10},
  };
  std::vector<int> dense_widths = {256, 256};
  double dense_dropout = 0.10;
  std::vector<GnnLayerSpec> gnn_stack = {
      GnnLayerSpec{GnnLayerSpec::Type::kChebyshev, 256, 1},
      GnnLayerSpec{GnnLayerSpec::Type::kChebyshev, 256, 1},
      GnnLayerSpec{GnnLayerSpec::Type::kGraphSkip, 256, 1},
  };
  double gnn_dropout = 0.10;
  bool attention_pool = true;
  int attention_channels = 5;
  int embedding_dense_units = 100;
  int embedding_dim = 32;
  int projection_hidden = 32;
  int projection_dim = 10;
  double head_dropout = 0.05;
  int prediction_hidden = 32;
  // output bias starts near the center of the intensity scale so the head
  // does not spend its first epochs climbing from zero
  double output_bias_init = 4.0;

  void validate() const {
    if (projection_dim >= embedding_dim)
      throw UsageError("projection dim must be smaller than embedding dim");
    if (blocks.empty() || dense_widths.empty() || gnn_stack.empty())
      throw UsageError("model config must declare conv blocks, dense widths and a gnn stack");
  }

  static ModelConfig from_config(const Config& c) {
    ModelConfig m;
    m.n_samples = static_cast<int>(c.get_long("model.n_samples", m.n_samples));
    const auto filters = c.get_long_list("model.cnn_filters", "16,16,24,24,48,96");
    const auto kernels = c.get_long_list("model.cnn_kernels", "50,25,12,12,4,4");
    const auto pools = c.get_long_list("model.cnn_pools", "4,6,12");
    const auto padding = c.get_list("model.cnn_padding", "same,valid,valid");
    if (filters.size() != kernels.size() || filters.size() != 2 * pools.size() ||
        pools.size() != padding.size())
      throw UsageError("cnn config: need 2 filters and 2 kernels per block, one pool "
                       "and one padding mode per block");
    const double cdrop = c.get_double("model.cnn_dropout", 0.10);
    m.blocks.clear();
    for (std::size_t i = 0; i < pools.size(); ++i) {
      ConvBlockSpec b;
      b.filters1 = static_cast<int>(filters[2 * i]);
      b.filters2 = static_cast<int>(filters[2 * i + 1]);
      b.kernel1 = static_cast<int>(kernels[2 * i]);
      b.kernel2 = static_cast<int>(kernels[2 * i + 1]);
      b.pool = static_cast<int>(pools[i]);
      if (padding[i] == "same") b.same_padding = true;
      else if (padding[i] == "valid") b.same_padding = false;
      else throw UsageError("cnn padding must be 'same' or 'valid'");
      b.dropout = cdrop;
      m.blocks.push_back(b);
    }
    m.dense_widths.clear();
    for (long w : c.get_long_list("model.dense_widths", "256,256"))
      m.dense_widths.push_back(static_cast<int>(w));
    m.dense_dropout = c.get_double("model.dense_dropout", 0.10);
    m.gnn_stack.clear();
    for (const auto& s : c.get_list("model.gnn_stack", "cheb:256:1,cheb:256:1,gcs:256"))
      m.gnn_stack.push_back(GnnLayerSpec::parse(s));
    m.gnn_dropout = c.get_double("model.gnn_dropout", 0.10);
    m.attention_pool = c.get_bool("model.attention_pool", true);
    m.attention_channels = static_cast<int>(c.get_long("model.attention_channels", 5));
    m.embedding_dense_units =
        static_cast<int>(c.get_long("model.embedding_dense_units", 100));
    m.embedding_dim = static_cast<int>(c.get_long("model.embedding_dim", 32));
    m.projection_hidden = static_cast<int>(c.get_long("model.projection_hidden", 32));
    m.projection_dim = static_cast<int>(c.get_long("model.projection_dim", 10));
    m.head_dropout = c.get_double("model.head_dropout", 0.05);
    m.prediction_hidden = static_cast<int>(c.get_long("model.prediction_hidden", 32));
    m.output_bias_init = c.get_double("model.output_bias_init", 4.0);
    m.validate();
    return m;
  }

  Config to_config() const {
    Config c;
    c.set("model.n_samples", std::to_string(n_samples));
    std::string f, k, p, pad;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (i) { f += ","; k += ","; p += ","; pad += ","; }
      f += std::to_string(blocks[i].filters1) + "," + std::to_string(blocks[i].filters2);
      k += std::to_string(blocks[i].kernel1) + "," + std::to_string(blocks[i].kernel2);
      p += std::to_string(blocks[i].pool);
      pad += blocks[i].same_padding ? "same" : "valid";
    }
    c.set("model.cnn_filters", f);
    c.set("model.cnn_kernels", k);
    c.set("model.cnn_pools", p);
    c.set("model.cnn_padding", pad);
    c.set("model.cnn_dropout", csv::format(blocks.empty() ? 0.1 : blocks[0].dropout));
    std::string d;
    for (std::size_t i = 0; i < dense_widths.size(); ++i)
      d += (i ? "," : "") + std::to_string(dense_widths[i]);
    c.set("model.dense_widths", d);
    c.set("model.dense_dropout", csv::format(dense_dropout));
    std::string g;
    for (std::size_t i = 0; i < gnn_stack.size(); ++i)
      g += (i ? "," : "") + gnn_stack[i].serialize();
    c.set("model.gnn_stack", g);
    c.set("model.gnn_dropout", csv::format(gnn_dropout));
    c.set("model.attention_pool", attention_pool ? "true" : "false");
    c.set("model.attention_channels", std::to_string(attention_channels));
    c.set("model.embedding_dense_units", std::to_string(embedding_dense_units));
    c.set("model.embedding_dim", std::to_string(embedding_dim));
    c.set("model.projection_hidden", std::to_string(projection_hidden));
    c.set("model.projection_dim", std::to_string(projection_dim));
    c.set("model.head_dropout", csv::format(head_dropout));
    c.set("model.prediction_hidden", std::to_string(prediction_hidden));
    c.set("model.output_bias_init", csv::format(output_bias_init));
    return c;
  }
};

struct ForwardResult {
  Matrix features;    // (B*N) x dense_out
  Matrix graph_out;   // (B*N) x gnn_out
  Matrix embedding;   // (B*N) x D_E
  Matrix projection;  // (B*N) x D_p when the contrastive head ran
  Vector intensity;   // B*N
};

/// The intensity network: time-distributed input normalization, per-station
/// 1D CNN feature extractor, graph block, embedding layer, and two heads
/// (disposable contrastive projection + intensity prediction).
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    input_bn_ = std::make_unique<BatchNorm>("input_bn", cfg_.n_components);

    int ch = cfg_.n_components;
    int len = cfg_.n_samples;
    int bi = 0;
    for (const auto& b : cfg_.blocks) {
      ConvBlock cb;
      const std::string prefix = "block" + std::to_string(bi++);
      cb.conv1 = std::make_unique<Conv1D>(prefix + ".conv1", ch, b.filters1,
                                          b.kernel1, b.same_padding,
                                          Activation::kSwish, rng);
      len = cb.conv1->out_length(len);
      cb.conv2 = std::make_unique<Conv1D>(prefix + ".conv2", b.filters1, b.filters2,
                                          b.kernel2, b.same_padding,
                                          Activation::kSwish, rng);
      len = cb.conv2->out_length(len);
      cb.bn = std::make_unique<BatchNorm>(prefix + ".bn", b.filters2);
      cb.pool = std::make_unique<MaxPool1D>(b.pool);
      len = cb.pool->out_length(len);
      cb.drop = std::make_unique<Dropout>(b.dropout);
      ch = b.filters2;
      blocks_.push_back(std::move(cb));
    }
    flat_len_ = len;
    flat_ch_ = ch;

    int dim = len * ch;
    int di = 0;
    for (int w : cfg_.dense_widths) {
      dense_.push_back(std::make_unique<Dense>("dense" + std::to_string(di++), dim, w,
                                               Activation::kSwish, rng));
      dim = w;
    }
    dense_drop_ = std::make_unique<Dropout>(cfg_.dense_dropout);

    int gi = 0;
    for (const auto& spec : cfg_.gnn_stack) {
      const std::string name = "gnn" + std::to_string(gi++);
      switch (spec.type) {
        case GnnLayerSpec::Type::kChebyshev:
          gnn_.push_back(std::make_unique<ChebyshevConv>(name, dim, spec.channels,
                                                         spec.order, rng));
          break;
        case GnnLayerSpec::Type::kGraphSkip:
          gnn_.push_back(std::make_unique<GraphSkipConv>(name, dim, spec.channels, rng));
          break;
        case GnnLayerSpec::Type::kGraphConv:
          gnn_.push_back(std::make_unique<GraphConv>(name, dim, spec.channels, rng));
          break;
        case GnnLayerSpec::Type::kDiffusion:
          gnn_.push_back(std::make_unique<DiffusionConv>(name, dim, spec.channels,
                                                         spec.order, rng));
          break;
        case GnnLayerSpec::Type::kAttention:
          gnn_.push_back(std::make_unique<GraphAttention>(name, dim, spec.channels, rng));
          break;
      }
      gnn_drop_.push_back(std::make_unique<Dropout>(cfg_.gnn_dropout));
      dim = spec.channels;
    }
    gnn_out_dim_ = dim;

    if (cfg_.attention_pool)
      gap_ = std::make_unique<GlobalAttentionPool>("gap", dim, cfg_.attention_channels, rng);
    node_dense_ = std::make_unique<Dense>("emb_dense", dim, cfg_.embedding_dense_units,
                                          Activation::kLinear, rng);
    const int cat = cfg_.embedding_dense_units +
                    (cfg_.attention_pool ? cfg_.attention_channels : 0);
    emb_out_ = std::make_unique<Dense>("emb_out", cat, cfg_.embedding_dim,
                                       Activation::kLinear, rng);

    proj_hidden_ = std::make_unique<Dense>("proj.hidden", cfg_.embedding_dim,
                                           cfg_.projection_hidden, Activation::kRelu, rng);
    proj_bn_ = std::make_unique<BatchNorm>("proj.bn", cfg_.projection_hidden);
    proj_drop_ = std::make_unique<Dropout>(cfg_.head_dropout);
    proj_out_ = std::make_unique<Dense>("proj.out", cfg_.projection_hidden,
                                        cfg_.projection_dim, Activation::kLinear, rng);

    pred_hidden_ = std::make_unique<Dense>("pred.hidden", cfg_.embedding_dim,
                                           cfg_.prediction_hidden, Activation::kRelu, rng);
    pred_out_ = std::make_unique<Dense>("pred.out", cfg_.prediction_hidden, 1,
                                        Activation::kRelu, rng);
    pred_out_->params()[1]->value(0, 0) = cfg_.output_bias_init;
  }

  const ModelConfig& config() const { return cfg_; }
  bool head_present() const { return head_present_; }
  bool trunk_frozen() const { return trunk_frozen_; }

  std::vector<Param*> trunk_params() {
    std::vector<Param*> out;
    auto add = [&out](std::vector<Param*> v) {
      out.insert(out.end(), v.begin(), v.end());
    };
    add(input_bn_->params());
    for (auto& b : blocks_) {
      add(b.conv1->params());
      add(b.conv2->params());
      add(b.bn->params());
    }
    for (auto& d : dense_) add(d->params());
    for (auto& g : gnn_) add(g->params());
    if (gap_) add(gap_->params());
    add(node_dense_->params());
    add(emb_out_->params());
    return out;
  }

  std::vector<Param*> projection_params() {
    std::vector<Param*> out;
    auto add = [&out](std::vector<Param*> v) {
      out.insert(out.end(), v.begin(), v.end());
    };
    add(proj_hidden_->params());
    add(proj_bn_->params());
    add(proj_out_->params());
    return out;
  }

  std::vector<Param*> prediction_params() {
    std::vector<Param*> out;
    auto add = [&out](std::vector<Param*> v) {
      out.insert(out.end(), v.begin(), v.end());
    };
    add(pred_hidden_->params());
    add(pred_out_->params());
    return out;
  }

  /// All live parameters (excludes the contrastive head once stripped).
  std::vector<Param*> params() {
    std::vector<Param*> out = trunk_params();
    if (head_present_) {
      auto h = projection_params();
      out.insert(out.end(), h.begin(), h.end());
    }
    auto p = prediction_params();
    out.insert(out.end(), p.begin(), p.end());
    return out;
  }

  long count_parameters() {
    long n = 0;
    for (const Param* p : params())
      if (p->learnable) n += p->size();
    return n;
  }

  void zero_grad() {
    for (Param* p : params()) p->zero_grad();
  }

  /// Removes the contrastive head and freezes everything up to and including
  /// the embedding layer. Returns false (no-op) when already stripped.
  bool strip_contrastive_head() {
    if (!head_present_) return false;
    head_present_ = false;
    trunk_frozen_ = true;
    for (Param* p : trunk_params()) p->frozen = true;
    return true;
  }

  // -------------------------------------------------------------------------
  // batched forward/backward
  // -------------------------------------------------------------------------

  ForwardResult forward(const SeqBatch& waveforms, int batch, int n_stations,
                        const GraphContext& graph, bool training, Rng* rng,
                        bool want_projection = true, bool want_intensity = true) {
    if (static_cast<int>(waveforms.size()) != batch * n_stations)
      throw UsageError("input unit count does not match batch * stations");
    if (graph.size() != n_stations)
      throw UsageError("graph size does not match station count");
    if (!waveforms.empty() && (waveforms[0].rows() != cfg_.n_samples ||
                               waveforms[0].cols() != cfg_.n_components))
      throw UsageError("input shape " + std::to_string(waveforms[0].rows()) + "x" +
                       std::to_string(waveforms[0].cols()) + " does not match model (" +
                       std::to_string(cfg_.n_samples) + "x" +
                       std::to_string(cfg_.n_components) + ")");
    const bool trunk_training = training && !trunk_frozen_;
    batch_ = batch;
    n_ = n_stations;
    gnn_pre_.resize(gnn_.size());

    SeqBatch cur, next;
    input_bn_->forward_seq(waveforms, cur, trunk_training);
    for (auto& b : blocks_) {
      b.conv1->forward(cur, next, trunk_training);
      cur.swap(next);
      b.conv2->forward(cur, next, trunk_training);
      cur.swap(next);
      b.bn->forward_seq(cur, next, trunk_training);
      cur.swap(next);
      b.pool->forward(cur, next);
      cur.swap(next);
      b.drop->forward_seq(cur, next, trunk_training, rng);
      cur.swap(next);
    }

    Matrix x = flatten_seq(cur);
    for (auto& d : dense_) x = d->forward(x);
    x = dense_drop_->forward(x, trunk_training, rng);

    ForwardResult out;
    out.features = x;

    for (std::size_t i = 0; i < gnn_.size(); ++i) {
      x = gnn_[i]->forward(x, batch, graph);
      gnn_pre_[i] = x;
      x = apply_activation(Activation::kRelu, x);
      if (i + 1 < gnn_.size()) x = gnn_drop_[i]->forward(x, trunk_training, rng);
    }
    out.graph_out = x;

    const Matrix node_feat = node_dense_->forward(x);
    Matrix cat;
    if (gap_) {
      const Matrix ctx = gap_->forward(x, batch, n_stations);
      cat.resize(x.rows(), node_feat.cols() + ctx.cols());
      cat.leftCols(node_feat.cols()) = node_feat;
      for (int bidx = 0; bidx < batch; ++bidx)
        cat.block(bidx * n_stations, node_feat.cols(), n_stations, ctx.cols()) =
            ctx.row(bidx).replicate(n_stations, 1);
    } else {
      cat = node_feat;
    }
    out.embedding = emb_out_->forward(cat);

    if (want_projection) {
      if (!head_present_)
        throw UsageError("contrastive head has been removed; projection unavailable");
      Matrix z = proj_hidden_->forward(out.embedding);
      z = proj_bn_->forward(z, training);
      z = proj_drop_->forward(z, training, rng);
      out.projection = proj_out_->forward(z);
    }
    if (want_intensity) {
      Matrix y = pred_hidden_->forward(out.embedding);
      y = pred_out_->forward(y);
      out.intensity = y.col(0);
    }
    return out;
  }

  /// Accumulates parameter gradients. Pass empty matrices for heads that did
  /// not run. When the trunk is frozen, backpropagation stops at the heads.
  void backward(const Matrix& d_projection, const Vector& d_intensity,
                const GraphContext& graph) {
    Matrix d_emb;
    if (d_projection.size() > 0) {
      Matrix g = proj_out_->backward(d_projection);
      g = proj_drop_->backward(g);
      g = proj_bn_->backward(g);
      d_emb = proj_hidden_->backward(g);
    }
    if (d_intensity.size() > 0) {
      Matrix g = pred_out_->backward(d_intensity);
      const Matrix gh = pred_hidden_->backward(g);
      if (d_emb.size() == 0) d_emb = gh;
      else d_emb += gh;
    }
    if (d_emb.size() == 0 || trunk_frozen_) return;

    const Matrix d_cat = emb_out_->backward(d_emb);
    Matrix dx;
    const int nd = node_dense_->out_dim();
    if (gap_) {
      Matrix d_ctx = Matrix::Zero(batch_, gap_->channels());
      for (int bidx = 0; bidx < batch_; ++bidx)
        d_ctx.row(bidx) =
            d_cat.block(bidx * n_, nd, n_, gap_->channels()).colwise().sum();
      dx = gap_->backward(d_ctx, batch_, n_);
      dx += node_dense_->backward(d_cat.leftCols(nd));
    } else {
      dx = node_dense_->backward(d_cat);
    }

    for (int i = static_cast<int>(gnn_.size()) - 1; i >= 0; --i) {
      if (i + 1 < static_cast<int>(gnn_.size())) dx = gnn_drop_[i]->backward(dx);
      dx = activation_backward(Activation::kRelu, gnn_pre_[i], dx);
      dx = gnn_[i]->backward(dx, batch_, graph);
    }

    dx = dense_drop_->backward(dx);
    for (int i = static_cast<int>(dense_.size()) - 1; i >= 0; --i)
      dx = dense_[i]->backward(dx);

    SeqBatch gseq, tmp;
    unflatten_seq(dx, flat_len_, flat_ch_, gseq);
    for (int i = static_cast<int>(blocks_.size()) - 1; i >= 0; --i) {
      auto& b = blocks_[i];
      b.drop->backward_seq(gseq, tmp);
      gseq.swap(tmp);
      b.pool->backward(gseq, tmp);
      gseq.swap(tmp);
      b.bn->backward_seq(gseq, tmp);
      gseq.swap(tmp);
      b.conv2->backward(gseq, tmp);
      gseq.swap(tmp);
      b.conv1->backward(gseq, tmp);
      gseq.swap(tmp);
    }
    input_bn_->backward_seq(gseq, tmp);
  }

  // -------------------------------------------------------------------------
  // single-sample inference entry points
  // -------------------------------------------------------------------------

  /// N x dense_out node features for one network snapshot (inference mode).
  Matrix forward_features(const SeqBatch& station_waveforms) {
    SeqBatch cur, next;
    input_bn_->forward_seq(station_waveforms, cur, false);
    for (auto& b : blocks_) {
      b.conv1->forward(cur, next, false);
      cur.swap(next);
      b.conv2->forward(cur, next, false);
      cur.swap(next);
      b.bn->forward_seq(cur, next, false);
      cur.swap(next);
      b.pool->forward(cur, next);
      cur.swap(next);
      b.drop->forward_seq(cur, next, false, nullptr);
      cur.swap(next);
    }
    Matrix x = flatten_seq(cur);
    for (auto& d : dense_) x = d->forward(x);
    return x;
  }

  Matrix forward_graph(const Matrix& features, const GraphContext& graph) {
    if (features.rows() != graph.size())
      throw UsageError("feature rows do not match graph size");
    Matrix x = features;
    for (std::size_t i = 0; i < gnn_.size(); ++i)
      x = apply_activation(Activation::kRelu, gnn_[i]->forward(x, 1, graph));
    return x;
  }

  Matrix forward_embedding(const Matrix& graph_out) {
    const int n = static_cast<int>(graph_out.rows());
    const Matrix node_feat = node_dense_->forward(graph_out);
    Matrix cat;
    if (gap_) {
      const Matrix ctx = gap_->forward(graph_out, 1, n);
      cat.resize(n, node_feat.cols() + ctx.cols());
      cat.leftCols(node_feat.cols()) = node_feat;
      cat.rightCols(ctx.cols()) = ctx.row(0).replicate(n, 1);
    } else {
      cat = node_feat;
    }
    return emb_out_->forward(cat);
  }

  Matrix forward_projection(const Matrix& embedding) {
    if (!head_present_)
      throw UsageError("contrastive head has been removed; projection unavailable");
    Matrix z = proj_hidden_->forward(embedding);
    z = proj_bn_->forward(z, false);
    return proj_out_->forward(z);
  }

  Vector forward_intensity(const Matrix& embedding) {
    Matrix y = pred_hidden_->forward(embedding);
    y = pred_out_->forward(y);
    return y.col(0);
  }

  /// Full inference for one event snapshot.
  Vector predict(const SeqBatch& station_waveforms, const GraphContext& graph) {
    const Matrix f = forward_features(station_waveforms);
    const Matrix g = forward_graph(f, graph);
    return forward_intensity(forward_embedding(g));
  }

  Matrix embed(const SeqBatch& station_waveforms, const GraphContext& graph) {
    const Matrix f = forward_features(station_waveforms);
    const Matrix g = forward_graph(f, graph);
    return forward_embedding(g);
  }

  // -------------------------------------------------------------------------
  // checkpoints: text header (config + array directory) followed by raw
  // little-endian f32 blocks in directory order, row-major.
  // -------------------------------------------------------------------------

  void save_checkpoint(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << "scgnn-checkpoint-v1\n";
    out << "head_present=" << (head_present_ ? 1 : 0) << "\n";
    out << "trunk_frozen=" << (trunk_frozen_ ? 1 : 0) << "\n";
    out << "[config]\n" << cfg_.to_config().serialize() << "[arrays]\n";
    auto ps = params();
    for (const Param* p : ps)
      out << p->name << " " << p->value.rows() << " " << p->value.cols() << " "
          << (p->frozen ? 1 : 0) << "\n";
    out << "[data]\n";
    for (const Param* p : ps) {
      std::vector<float> buf(static_cast<std::size_t>(p->value.size()));
      std::size_t idx = 0;
      for (long r = 0; r < p->value.rows(); ++r)
        for (long c = 0; c < p->value.cols(); ++c)
          buf[idx++] = static_cast<float>(p->value(r, c));
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
  }

  static Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing or unreadable checkpoint: " + path);
    std::string line;
    auto next_line = [&]() {
      if (!std::getline(in, line)) throw DataError(path + ": truncated checkpoint");
      return line;
    };
    if (next_line() != "scgnn-checkpoint-v1")
      throw DataError(path + ": not a checkpoint file");
    bool head_present = true, trunk_frozen = false;
    {
      const std::string h = next_line();
      if (h.rfind("head_present=", 0) != 0) throw DataError(path + ": bad header");
      head_present = h.back() == '1';
      const std::string f = next_line();
      if (f.rfind("trunk_frozen=", 0) != 0) throw DataError(path + ": bad header");
      trunk_frozen = f.back() == '1';
    }
    if (next_line() != "[config]") throw DataError(path + ": missing [config]");
    Config cfg;
    while (next_line() != "[arrays]") {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw DataError(path + ": bad config line " + line);
      cfg.set(csv::trim(line.substr(0, eq)), csv::trim(line.substr(eq + 1)));
    }
    struct Entry { std::string name; long rows, cols; bool frozen; };
    std::vector<Entry> entries;
    while (next_line() != "[data]") {
      std::istringstream ss(line);
      Entry e;
      int fz;
      if (!(ss >> e.name >> e.rows >> e.cols >> fz))
        throw DataError(path + ": bad array entry " + line);
      e.frozen = fz != 0;
      entries.push_back(e);
    }

    Model model(ModelConfig::from_config(cfg), /*seed=*/0);
    model.head_present_ = head_present;
    model.trunk_frozen_ = trunk_frozen;
    std::map<std::string, Param*> by_name;
    for (Param* p : model.params()) by_name[p->name] = p;
    if (entries.size() != by_name.size())
      throw DataError(path + ": checkpoint has " + std::to_string(entries.size()) +
                      " arrays, model expects " + std::to_string(by_name.size()));
    for (const auto& e : entries) {
      const auto it = by_name.find(e.name);
      if (it == by_name.end()) throw DataError(path + ": unknown array " + e.name);
      Param* p = it->second;
      if (p->value.rows() != e.rows || p->value.cols() != e.cols)
        throw DataError(path + ": shape mismatch for " + e.name);
      std::vector<float> buf(static_cast<std::size_t>(e.rows * e.cols));
      in.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
      if (!in) throw DataError(path + ": truncated array data");
      std::size_t idx = 0;
      for (long r = 0; r < e.rows; ++r)
        for (long c = 0; c < e.cols; ++c) p->value(r, c) = buf[idx++];
      p->frozen = e.frozen;
    }
    return model;
  }

  /// In-memory full-precision snapshot of all live parameter values.
  std::vector<Matrix> snapshot() {
    std::vector<Matrix> s;
    for (const Param* p : params()) s.push_back(p->value);
    return s;
  }

  void restore(const std::vector<Matrix>& snap) {
    auto ps = params();
    if (snap.size() != ps.size())
      throw UsageError("snapshot size does not match live parameter count");
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = snap[i];
  }

 private:
  struct ConvBlock {
    std::unique_ptr<Conv1D> conv1, conv2;
    std::unique_ptr<BatchNorm> bn;
    std::unique_ptr<MaxPool1D> pool;
    std::unique_ptr<Dropout> drop;
  };

  ModelConfig cfg_;
  std::unique_ptr<BatchNorm> input_bn_;
  std::vector<ConvBlock> blocks_;
  std::vector<std::unique_ptr<Dense>> dense_;
  std::unique_ptr<Dropout> dense_drop_;
  std::vector<std::unique_ptr<GraphLayer>> gnn_;
  std::vector<std::unique_ptr<Dropout>> gnn_drop_;
  std::vector<Matrix> gnn_pre_;
  std::unique_ptr<GlobalAttentionPool> gap_;
  std::unique_ptr<Dense> node_dense_, emb_out_;
  std::unique_ptr<Dense> proj_hidden_, proj_out_;
  std::unique_ptr<BatchNorm> proj_bn_;
  std::unique_ptr<Dropout> proj_drop_;
  std::unique_ptr<Dense> pred_hidden_, pred_out_;
  bool head_present_ = true;
  bool trunk_frozen_ = false;
  int flat_len_ = 0, flat_ch_ = 0, gnn_out_dim_ = 0;
  int batch_ = 0, n_ = 0;
};

}  // namespace nn
}  // namespace scgnn
