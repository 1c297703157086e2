#pragma once

#include "scgnn/augment.hpp"
#include "scgnn/config.hpp"
#include "scgnn/dataset.hpp"
#include "scgnn/losses.hpp"
#include "scgnn/nn/adam.hpp"
#include "scgnn/nn/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace scgnn {

enum class AugmentationMode { kSample, kEnumerate };

struct TrainConfig {
  int epochs_phase1 = 100;
  int epochs_phase2 = 100;
  int batch_size = 32;  // samples per batch; phase 1 packs batch_size/2 events
  double lr_initial = 1e-3;
  double lr_final = 1e-5;
  std::uint64_t seed = 1;
  std::uint64_t augment_seed = 1;
  bool include_empty_events = false;
  AugmentationMode augment_mode = AugmentationMode::kSample;
  std::vector<int> clip_choices_s = {5, 10, 15, 20, 25};
  bool clip_choices_explicit = false;  // set when the config names them
  LossConfig loss;

  int total_epochs() const { return epochs_phase1 + epochs_phase2; }

  void validate() const {
    if (epochs_phase1 < 1 || epochs_phase2 < 1)
      throw UsageError("each training phase needs at least 1 epoch");
    if (batch_size < 2 || batch_size % 2 != 0)
      throw UsageError("batch size must be even and >= 2");
    if (!(lr_initial > lr_final && lr_final > 0.0))
      throw UsageError("learning rates must satisfy initial > final > 0");
    loss.validate();
  }

  static TrainConfig from_config(const Config& c) {
    TrainConfig t;
    t.epochs_phase1 = static_cast<int>(c.get_long("train.epochs_phase1", 100));
    t.epochs_phase2 = static_cast<int>(c.get_long("train.epochs_phase2", 100));
    t.batch_size = static_cast<int>(c.get_long("train.batch_size", 32));
    t.lr_initial = c.get_double("train.lr_initial", 1e-3);
    t.lr_final = c.get_double("train.lr_final", 1e-5);
    t.seed = static_cast<std::uint64_t>(c.get_long("train.seed", 1));
    t.augment_seed = static_cast<std::uint64_t>(
        c.get_long("augmentation.seed", static_cast<long>(t.seed)));
    t.include_empty_events = c.get_bool("train.include_empty_events", false);
    const std::string mode = c.get("augmentation.mode", "sample");
    if (mode == "sample") t.augment_mode = AugmentationMode::kSample;
    else if (mode == "enumerate") t.augment_mode = AugmentationMode::kEnumerate;
    else throw UsageError("augmentation.mode must be 'sample' or 'enumerate'");
    t.clip_choices_explicit = c.has("augmentation.clip_choices");
    t.clip_choices_s.clear();
    for (long v : c.get_long_list("augmentation.clip_choices", "5,10,15,20,25"))
      t.clip_choices_s.push_back(static_cast<int>(v));
    t.loss.temperature = c.get_double("loss.temperature", 0.1);
    t.loss.w_correlation = c.get_double("loss.w_correlation", 0.002);
    t.loss.w_huber = c.get_double("loss.w_huber", 1.0);
    t.loss.w_mse = c.get_double("loss.w_mse", 0.0096);
    t.loss.w_mae = c.get_double("loss.w_mae", 0.002);
    t.loss.w_asym_huber = c.get_double("loss.w_asym_huber", 0.0032);
    t.loss.huber_delta = c.get_double("loss.huber_delta", 1.0);
    t.loss.underestimate_factor = c.get_double("loss.underestimate_factor", 2.0);
    t.validate();
    return t;
  }

  Config to_config() const {
    Config c;
    c.set("train.epochs_phase1", std::to_string(epochs_phase1));
    c.set("train.epochs_phase2", std::to_string(epochs_phase2));
    c.set("train.batch_size", std::to_string(batch_size));
    c.set("train.lr_initial", csv::format(lr_initial));
    c.set("train.lr_final", csv::format(lr_final));
    c.set("train.seed", std::to_string(seed));
    c.set("train.include_empty_events", include_empty_events ? "true" : "false");
    c.set("augmentation.seed", std::to_string(augment_seed));
    c.set("augmentation.mode",
          augment_mode == AugmentationMode::kSample ? "sample" : "enumerate");
    std::string clips;
    for (std::size_t i = 0; i < clip_choices_s.size(); ++i)
      clips += (i ? "," : "") + std::to_string(clip_choices_s[i]);
    c.set("augmentation.clip_choices", clips);
    c.set("loss.temperature", csv::format(loss.temperature));
    c.set("loss.w_correlation", csv::format(loss.w_correlation));
    c.set("loss.w_huber", csv::format(loss.w_huber));
    c.set("loss.w_mse", csv::format(loss.w_mse));
    c.set("loss.w_mae", csv::format(loss.w_mae));
    c.set("loss.w_asym_huber", csv::format(loss.w_asym_huber));
    c.set("loss.huber_delta", csv::format(loss.huber_delta));
    c.set("loss.underestimate_factor", csv::format(loss.underestimate_factor));
    return c;
  }
};

/// Continuous exponential interpolation from lr_initial at epoch 0 to
/// lr_final at the last scheduled epoch.
inline double lr_at(const TrainConfig& cfg, int epoch) {
  const double frac = static_cast<double>(epoch) / cfg.total_epochs();
  return cfg.lr_initial * std::pow(cfg.lr_final / cfg.lr_initial, frac);
}

struct CheckpointRecord {
  int epoch = -1;
  int phase = 1;
  double metric = std::numeric_limits<double>::infinity();
  std::vector<Matrix> snapshot;
  std::string path;
};

struct EpochLog {
  int epoch = 0;
  int phase = 1;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_metric = 0.0;
};

/// Builds the model input for one event: one (n_samples x 3) double matrix
/// per station, optionally clipped network-wide to clip_s seconds.
inline nn::SeqBatch event_input(const Dataset& ds, const EventSample& ev,
                                double clip_s = 0.0) {
  nn::SeqBatch out;
  out.reserve(ev.waveforms.size());
  for (const auto& w : ev.waveforms) {
    MatrixF f = clip_s > 0.0 ? clip_and_pad(w.samples, clip_s) : w.samples;
    out.push_back(f.cast<double>());
  }
  (void)ds;
  return out;
}

/// Orchestrates the two training phases: hybrid contrastive pre-training,
/// head removal + trunk freeze, and regression fine-tuning on cached
/// embeddings. Single-threaded and bitwise reproducible for a fixed seed.
class Trainer {
 public:
  Trainer(const Dataset& ds, const DatasetSplit& split, const TrainConfig& cfg,
          const nn::GraphContext& graph, std::string rundir = "")
      : ds_(ds), cfg_(cfg), graph_(graph), rundir_(std::move(rundir)) {
    cfg_.validate();
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < ds.events.size(); ++i)
      index[ds.events[i].event_id] = static_cast<int>(i);
    auto resolve = [&](const std::vector<std::string>& ids) {
      std::vector<int> out;
      for (const auto& id : ids) {
        const auto it = index.find(id);
        if (it == index.end()) throw DataError("split names unknown event " + id);
        const EventSample& ev = ds.events[it->second];
        if (!cfg_.include_empty_events && !ev.has_any_waveform()) continue;
        out.push_back(it->second);
      }
      return out;
    };
    train_events_ = resolve(split.train);
    val_events_ = resolve(split.validation);
    if (train_events_.empty()) throw DataError("no usable training events");
    if (val_events_.empty()) throw DataError("no usable validation events");
    spec_.full_length_s =
        static_cast<int>(ds.n_samples / kSamplingRateHz + 0.5);
    // short-window datasets get the tighter default clip set
    if (!cfg_.clip_choices_explicit && spec_.full_length_s <= 10)
      cfg_.clip_choices_s = {5, 6, 7, 8, 9};
    spec_.clip_choices_s = cfg_.clip_choices_s;
    spec_.validate();
    if (!rundir_.empty()) {
      std::filesystem::create_directories(rundir_);
      metrics_csv_.open((std::filesystem::path(rundir_) / "metrics.csv").string());
      metrics_csv_ << "epoch,phase,lr,train_loss,val_metric\n";
    }
  }

  const std::vector<EpochLog>& logs() const { return logs_; }
  const AugmentationSpec& augmentation() const { return spec_; }

  // ---- phase 1: hybrid contrastive training --------------------------------

  CheckpointRecord train_phase1(nn::Model& model) {
    nn::Adam adam(model.params());
    Rng drop_rng(cfg_.seed ^ 0x5eed0d20u);
    CheckpointRecord best;
    best.phase = 1;
    for (int epoch = 0; epoch < cfg_.epochs_phase1; ++epoch) {
      const double lr = lr_at(cfg_, epoch);
      double train_loss_sum = 0.0;
      int n_batches = 0;
      const auto batches = phase1_batches(epoch);
      for (std::size_t bi = 0; bi < batches.size(); ++bi) {
        const double loss = phase1_step(model, batches[bi], &adam, lr, &drop_rng);
        if (!std::isfinite(loss))
          throw NumericError("training diverged (non-finite loss) at phase 1 epoch " +
                             std::to_string(epoch));
        train_loss_sum += loss;
        ++n_batches;
      }
      const double val = phase1_validation(model);
      if (!std::isfinite(val))
        throw NumericError("validation metric non-finite at phase 1 epoch " +
                           std::to_string(epoch));
      log_epoch(epoch, 1, lr, train_loss_sum / std::max(1, n_batches), val);
      if (val < best.metric) {
        best.epoch = epoch;
        best.metric = val;
        best.snapshot = model.snapshot();
        if (!rundir_.empty()) {
          best.path = (std::filesystem::path(rundir_) / "phase1_best.ckpt").string();
          model.save_checkpoint(best.path);
        }
      }
    }
    if (best.epoch < 0) throw NumericError("phase 1 produced no finite checkpoint");
    return best;
  }

  /// Reload the phase-1 best weights, drop the contrastive head and freeze
  /// the trunk.
  void freeze_and_strip(nn::Model& model, const CheckpointRecord& best) {
    model.restore(best.snapshot);
    model.strip_contrastive_head();
  }

  // ---- phase 2: regression fine-tuning on cached embeddings ---------------

  CheckpointRecord train_phase2(nn::Model& model) {
    if (model.head_present() || !model.trunk_frozen())
      throw UsageError("phase 2 requires a stripped head and frozen trunk");
    nn::Adam adam(model.prediction_params());
    CheckpointRecord best;
    best.phase = 2;

    // Frozen trunk in inference mode: embeddings are fixed per event.
    std::unordered_map<int, Matrix> emb_cache;
    for (int ei : train_events_) emb_cache[ei] = embed_event(model, ei);
    for (int ei : val_events_) emb_cache[ei] = embed_event(model, ei);

    Rng drop_rng(cfg_.seed ^ 0x5eed0d21u);
    for (int epoch = 0; epoch < cfg_.epochs_phase2; ++epoch) {
      const int global_epoch = cfg_.epochs_phase1 + epoch;
      const double lr = lr_at(cfg_, global_epoch);
      std::vector<int> order = train_events_;
      Rng shuffle_rng(epoch_seed(global_epoch));
      shuffle_rng.shuffle(order);

      double train_loss_sum = 0.0;
      int n_batches = 0;
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(cfg_.batch_size)) {
        const std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(cfg_.batch_size));
        std::vector<int> evs(order.begin() + start, order.begin() + stop);
        const double loss = phase2_step(model, evs, emb_cache, &adam, lr, &drop_rng);
        if (!std::isfinite(loss))
          throw NumericError("training diverged (non-finite loss) at phase 2 epoch " +
                             std::to_string(epoch));
        train_loss_sum += loss;
        ++n_batches;
      }
      const double val = phase2_validation(model, emb_cache);
      if (!std::isfinite(val))
        throw NumericError("validation metric non-finite at phase 2 epoch " +
                           std::to_string(epoch));
      log_epoch(global_epoch, 2, lr, train_loss_sum / std::max(1, n_batches), val);
      if (val < best.metric) {
        best.epoch = global_epoch;
        best.metric = val;
        best.snapshot = model.snapshot();
        if (!rundir_.empty()) {
          best.path = (std::filesystem::path(rundir_) / "phase2_best.ckpt").string();
          model.save_checkpoint(best.path);
        }
      }
    }
    if (best.epoch < 0) throw NumericError("phase 2 produced no finite checkpoint");
    return best;
  }

  /// Runs both phases and leaves the model at the phase-2 optimum.
  CheckpointRecord run(nn::Model& model) {
    const CheckpointRecord p1 = train_phase1(model);
    freeze_and_strip(model, p1);
    CheckpointRecord p2 = train_phase2(model);
    model.restore(p2.snapshot);
    if (!rundir_.empty()) {
      p2.path = (std::filesystem::path(rundir_) / "final.ckpt").string();
      model.save_checkpoint(p2.path);
    }
    return p2;
  }

 private:
  struct PairItem {
    int event_index;
    int clip_s;
  };
  using Batch = std::vector<PairItem>;

  std::uint64_t epoch_seed(int epoch) const {
    return cfg_.seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(epoch + 1);
  }

  std::vector<Batch> phase1_batches(int epoch) const {
    std::vector<PairItem> items;
    Rng rng(cfg_.augment_seed + 0xA5A5A5A5ull * static_cast<std::uint64_t>(epoch + 1));
    if (cfg_.augment_mode == AugmentationMode::kSample) {
      for (int ei : train_events_) {
        const int clip = cfg_.clip_choices_s[rng.uniform_int(cfg_.clip_choices_s.size())];
        items.push_back({ei, clip});
      }
    } else {
      for (int ei : train_events_)
        for (int clip : cfg_.clip_choices_s) items.push_back({ei, clip});
    }
    Rng shuffle_rng(epoch_seed(epoch));
    shuffle_rng.shuffle(items);
    // a batch may not repeat an event; greedy packing preserves determinism
    std::vector<Batch> batches;
    const int per_batch = cfg_.batch_size / 2;
    std::vector<PairItem> pending = std::move(items);
    while (!pending.empty()) {
      Batch b;
      std::vector<PairItem> rest;
      std::set<int> used;
      for (const auto& it : pending) {
        if (static_cast<int>(b.size()) < per_batch && !used.count(it.event_index)) {
          b.push_back(it);
          used.insert(it.event_index);
        } else {
          rest.push_back(it);
        }
      }
      batches.push_back(std::move(b));
      pending = std::move(rest);
    }
    return batches;
  }

  /// Stacks per-sample projections into one row vector per sample.
  static Matrix stack_projections(const Matrix& proj, int batch, int n) {
    Matrix z(batch, n * proj.cols());
    for (int b = 0; b < batch; ++b)
      for (int i = 0; i < n; ++i)
        z.block(b, i * proj.cols(), 1, proj.cols()) = proj.row(b * n + i);
    return z;
  }

  static Matrix unstack_projections(const Matrix& gz, int batch, int n, int dim) {
    Matrix g(batch * n, dim);
    for (int b = 0; b < batch; ++b)
      for (int i = 0; i < n; ++i)
        g.row(b * n + i) = gz.block(b, i * dim, 1, dim);
    return g;
  }

  double phase1_step(nn::Model& model, const Batch& batch, nn::Adam* adam,
                     double lr, Rng* drop_rng) {
    const int n = ds_.network.size();
    const int m = static_cast<int>(batch.size()) * 2;
    nn::SeqBatch input;
    ContrastiveBatch layout;
    for (const auto& item : batch) {
      const EventSample& ev = ds_.events[item.event_index];
      auto orig = event_input(ds_, ev);
      auto aug = event_input(ds_, ev, item.clip_s);
      input.insert(input.end(), orig.begin(), orig.end());
      input.insert(input.end(), aug.begin(), aug.end());
      BatchSample so{ev.event_id, item.event_index, false, 0.0};
      BatchSample sa{ev.event_id, item.event_index, true,
                     static_cast<double>(item.clip_s)};
      layout.samples.push_back(so);
      layout.samples.push_back(sa);
    }

    auto out = model.forward(input, m, n, graph_, /*training=*/true, drop_rng);

    const Matrix z = stack_projections(out.projection, m, n);
    const auto cont = contrastive_loss(z, layout, cfg_.loss.temperature);
    Matrix d_proj = unstack_projections(cont.grad, m, n,
                                        static_cast<int>(out.projection.cols()));

    Vector pred, target;
    std::vector<long> pos;
    gather_labeled(layout, out.intensity, n, pred, target, pos);
    double reg_value = 0.0;
    Vector d_int = Vector::Zero(out.intensity.size());
    if (pred.size() >= 2) {
      const auto reg = regression_loss(pred, target, cfg_.loss);
      reg_value = reg.value;
      for (long i = 0; i < pred.size(); ++i) d_int(pos[i]) = reg.grad(i);
    }

    const double total = hybrid_loss(cont.value, reg_value);
    model.zero_grad();
    model.backward(d_proj, d_int, graph_);
    adam->step(lr);
    return total;
  }

  void gather_labeled(const ContrastiveBatch& layout, const Vector& intensity,
                      int n, Vector& pred, Vector& target,
                      std::vector<long>& positions) const {
    std::vector<double> p, t;
    for (int m = 0; m < layout.size(); ++m) {
      const EventSample& ev = ds_.events[layout.samples[m].event_index];
      for (int s = 0; s < n; ++s) {
        if (!ev.label_valid[s]) continue;
        p.push_back(intensity(m * static_cast<long>(n) + s));
        t.push_back(ev.labels[s]);
        positions.push_back(m * static_cast<long>(n) + s);
      }
    }
    pred = Eigen::Map<Vector>(p.data(), static_cast<long>(p.size()));
    target = Eigen::Map<Vector>(t.data(), static_cast<long>(t.size()));
  }

  /// Validation metric for phase 1: mean per-sample contrastive loss over
  /// fixed validation batches plus 100x the regression loss over all labeled
  /// validation pairs. The augmentation draw is frozen so epochs compare on
  /// identical inputs.
  double phase1_validation(nn::Model& model) {
    const int n = ds_.network.size();
    Rng rng(cfg_.augment_seed ^ 0xBADD90A7ull);
    double cont_sum = 0.0;
    long cont_samples = 0;
    std::vector<double> pred_all, target_all;
    const int per_batch = cfg_.batch_size / 2;
    for (std::size_t start = 0; start < val_events_.size();
         start += static_cast<std::size_t>(per_batch)) {
      const std::size_t stop =
          std::min(val_events_.size(), start + static_cast<std::size_t>(per_batch));
      nn::SeqBatch input;
      ContrastiveBatch layout;
      for (std::size_t i = start; i < stop; ++i) {
        const EventSample& ev = ds_.events[val_events_[i]];
        const int clip =
            cfg_.clip_choices_s[rng.uniform_int(cfg_.clip_choices_s.size())];
        auto orig = event_input(ds_, ev);
        auto aug = event_input(ds_, ev, clip);
        input.insert(input.end(), orig.begin(), orig.end());
        input.insert(input.end(), aug.begin(), aug.end());
        layout.samples.push_back({ev.event_id, val_events_[i], false, 0.0});
        layout.samples.push_back(
            {ev.event_id, val_events_[i], true, static_cast<double>(clip)});
      }
      const int m = layout.size();
      auto out = model.forward(input, m, n, graph_, /*training=*/false, nullptr);
      const Matrix z = stack_projections(out.projection, m, n);
      cont_sum += contrastive_loss(z, layout, cfg_.loss.temperature, false).value;
      cont_samples += m;
      for (int mi = 0; mi < m; ++mi) {
        const EventSample& ev = ds_.events[layout.samples[mi].event_index];
        for (int s = 0; s < n; ++s) {
          if (!ev.label_valid[s]) continue;
          pred_all.push_back(out.intensity(mi * static_cast<long>(n) + s));
          target_all.push_back(ev.labels[s]);
        }
      }
    }
    double reg_value = 0.0;
    if (pred_all.size() >= 2) {
      const Vector p = Eigen::Map<Vector>(pred_all.data(), static_cast<long>(pred_all.size()));
      const Vector t = Eigen::Map<Vector>(target_all.data(), static_cast<long>(target_all.size()));
      reg_value = regression_loss(p, t, cfg_.loss, false).value;
    }
    return cont_sum / std::max<long>(1, cont_samples) + 100.0 * reg_value;
  }

  Matrix embed_event(nn::Model& model, int event_index) {
    return model.embed(event_input(ds_, ds_.events[event_index]), graph_);
  }

  double phase2_step(nn::Model& model, const std::vector<int>& events,
                     const std::unordered_map<int, Matrix>& emb_cache,
                     nn::Adam* adam, double lr, Rng* /*drop_rng*/) {
    const int n = ds_.network.size();
    const int b = static_cast<int>(events.size());
    Matrix emb(b * n, model.config().embedding_dim);
    for (int i = 0; i < b; ++i) emb.middleRows(i * n, n) = emb_cache.at(events[i]);
    const Vector intensity = model.forward_intensity(emb);

    std::vector<double> p, t;
    std::vector<long> pos;
    for (int i = 0; i < b; ++i) {
      const EventSample& ev = ds_.events[events[i]];
      for (int s = 0; s < n; ++s) {
        if (!ev.label_valid[s]) continue;
        p.push_back(intensity(i * static_cast<long>(n) + s));
        t.push_back(ev.labels[s]);
        pos.push_back(i * static_cast<long>(n) + s);
      }
    }
    if (p.size() < 2) return 0.0;
    const Vector pred = Eigen::Map<Vector>(p.data(), static_cast<long>(p.size()));
    const Vector target = Eigen::Map<Vector>(t.data(), static_cast<long>(t.size()));
    const auto reg = regression_loss(pred, target, cfg_.loss);
    Vector d_int = Vector::Zero(intensity.size());
    for (std::size_t i = 0; i < pos.size(); ++i) d_int(pos[i]) = reg.grad(static_cast<long>(i));
    model.zero_grad();
    model.backward(Matrix(), d_int, graph_);
    adam->step(lr);
    return reg.value;
  }

  double phase2_validation(nn::Model& model,
                           const std::unordered_map<int, Matrix>& emb_cache) {
    const int n = ds_.network.size();
    std::vector<double> p, t;
    for (int ei : val_events_) {
      const Vector intensity = model.forward_intensity(emb_cache.at(ei));
      const EventSample& ev = ds_.events[ei];
      for (int s = 0; s < n; ++s) {
        if (!ev.label_valid[s]) continue;
        p.push_back(intensity(s));
        t.push_back(ev.labels[s]);
      }
    }
    if (p.size() < 2) return 0.0;
    const Vector pred = Eigen::Map<Vector>(p.data(), static_cast<long>(p.size()));
    const Vector target = Eigen::Map<Vector>(t.data(), static_cast<long>(t.size()));
    return regression_loss(pred, target, cfg_.loss, false).value;
  }

  void log_epoch(int epoch, int phase, double lr, double train_loss, double val) {
    logs_.push_back({epoch, phase, lr, train_loss, val});
    if (metrics_csv_.is_open()) {
      metrics_csv_ << epoch << "," << phase << "," << csv::format(lr) << ","
                   << csv::format(train_loss) << "," << csv::format(val) << "\n";
      metrics_csv_.flush();
    }
  }

  const Dataset& ds_;
  TrainConfig cfg_;
  const nn::GraphContext& graph_;
  std::string rundir_;
  std::vector<int> train_events_, val_events_;
  AugmentationSpec spec_;
  std::vector<EpochLog> logs_;
  std::ofstream metrics_csv_;
};

}  // namespace scgnn
