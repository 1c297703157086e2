// Command-line front end: dataset synthesis, graph preparation, training,
// prediction, evaluation and warning-time reporting over the dataset
// directory format documented in the README.

#include "scgnn/adjacency.hpp"
#include "scgnn/augment.hpp"
#include "scgnn/config.hpp"
#include "scgnn/dataset.hpp"
#include "scgnn/eew.hpp"
#include "scgnn/gmice.hpp"
#include "scgnn/manifest.hpp"
#include "scgnn/metrics.hpp"
#include "scgnn/nn/model.hpp"
#include "scgnn/svg.hpp"
#include "scgnn/synth.hpp"
#include "scgnn/training.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace scgnn;

namespace {

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Config overlay_config(const std::string& config_path,
                      const std::vector<std::string>& sets) {
  Config cfg;
  if (!config_path.empty()) cfg = Config::from_file(config_path);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw UsageError("--set expects key=value, got '" + kv + "'");
    cfg.set(csv::trim(kv.substr(0, eq)), csv::trim(kv.substr(eq + 1)));
  }
  return cfg;
}

std::map<std::string, std::string> read_split_roles(const std::string& path) {
  const auto t = csv::Table::read(path, true);
  const int c_ev = t.require_column("event_id", path);
  const int c_role = t.require_column("role", path);
  std::map<std::string, std::string> roles;
  for (const auto& row : t.rows) roles[row[c_ev]] = row[c_role];
  return roles;
}

// ---------------------------------------------------------------------------

int cmd_prepare_adjacency(const std::string& distances_path, double quantile,
                          const std::string& domain, const std::string& out,
                          const std::vector<std::string>& argv) {
  const auto t = csv::Table::read(distances_path, false);
  const int n = static_cast<int>(t.rows.size());
  Matrix d(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(t.rows[i].size()) != n)
      throw DataError(distances_path + ": not square");
    for (int j = 0; j < n; ++j)
      d(i, j) = csv::to_double(t.rows[i][j], distances_path);
  }
  PercentileDomain pd;
  if (domain == "offdiag") pd = PercentileDomain::kOffDiagonal;
  else if (domain == "all") pd = PercentileDomain::kAll;
  else throw UsageError("--percentile-domain must be offdiag or all");

  const auto a = build_adjacency(d, quantile, pd);
  const auto report = validate_adjacency(a.weights);
  {
    csv::Writer w(out);
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> row;
      for (int j = 0; j < n; ++j) row.push_back(csv::format(a.weights(i, j)));
      w.row(row);
    }
  }
  std::cout << "adjacency " << n << "x" << n << " written to " << out
            << " (sparsity " << short_num(report.sparsity) << ")\n";

  RunManifest manifest("prepare-adjacency", argv);
  Config cfg;
  cfg.set("quantile", csv::format(quantile));
  cfg.set("percentile_domain", domain);
  manifest.set_config(cfg);
  manifest.add_input(distances_path);
  manifest.add_output(out);
  manifest.write(out + ".manifest.json");
  return 0;
}

int cmd_synth_data(const std::string& config_path,
                   const std::vector<std::string>& sets, const std::string& out,
                   const std::vector<std::string>& argv) {
  const Config cfg = overlay_config(config_path, sets);
  const SynthConfig scfg = SynthConfig::from_config(cfg);
  const auto result = synth_generate(scfg);
  synth_write(scfg, result, out);
  std::cout << "synthetic dataset: " << scfg.n_events << " events, "
            << scfg.n_stations << " stations -> " << out << "\n";

  RunManifest manifest("synth-data", argv);
  manifest.set_config(cfg);
  manifest.set_seed(scfg.seed);
  if (!config_path.empty()) manifest.add_input(config_path);
  manifest.add_output_dir(out);
  manifest.write((fs::path(out) / "manifest.json").string());
  return 0;
}

int cmd_augment_preview(const std::string& dataset_dir, int pairs,
                        std::uint64_t seed, const std::string& out,
                        const std::vector<std::string>& argv) {
  const Dataset ds = load_dataset(dataset_dir);
  fs::create_directories(out);
  AugmentationSpec spec;
  spec.full_length_s = static_cast<int>(ds.n_samples / kSamplingRateHz + 0.5);
  if (spec.full_length_s <= 10) spec.clip_choices_s = {5, 6, 7, 8, 9};
  pairs = std::min<int>(pairs, static_cast<int>(ds.events.size()));
  std::vector<int> events;
  std::vector<std::string> ids;
  for (int i = 0; i < pairs; ++i) {
    events.push_back(i);
    ids.push_back(ds.events[i].event_id);
  }
  const auto batch = make_contrastive_batch(events, ids, spec, seed);
  {
    csv::Writer w((fs::path(out) / "layout.csv").string());
    w.row({"position", "event_id", "kind", "clip_s"});
    for (int m = 0; m < batch.size(); ++m)
      w.row({std::to_string(m), batch.samples[m].event_id,
             batch.samples[m].is_augmented ? "augmented" : "original",
             csv::format(batch.samples[m].clip_s)});
  }
  {
    // first event, first station: original next to its augmentation
    const auto& ev = ds.events[0];
    const double clip = batch.samples[1].clip_s;
    const MatrixF aug = clip_and_pad(ev.waveforms[0].samples, clip);
    csv::Writer w((fs::path(out) / "example_pair.csv").string());
    w.row({"t_s", "orig_e", "orig_n", "orig_z", "aug_e", "aug_n", "aug_z"});
    for (int t = 0; t < ds.n_samples; ++t)
      w.row({csv::format(t / kSamplingRateHz), csv::format(ev.waveforms[0].samples(t, 0)),
             csv::format(ev.waveforms[0].samples(t, 1)),
             csv::format(ev.waveforms[0].samples(t, 2)), csv::format(aug(t, 0)),
             csv::format(aug(t, 1)), csv::format(aug(t, 2))});
  }
  std::cout << "augmentation preview for " << pairs << " events -> " << out << "\n";

  RunManifest manifest("augment-preview", argv);
  manifest.set_seed(seed);
  manifest.add_input_dir(dataset_dir);
  manifest.add_output_dir(out);
  manifest.write((fs::path(out) / "manifest.json").string());
  return 0;
}

int cmd_train(const std::string& dataset_dir, const std::string& config_path,
              const std::vector<std::string>& sets, const std::string& out,
              double quantile, int folds, int fold, double train_frac,
              double val_frac, const std::vector<std::string>& argv) {
  Config cfg = overlay_config(config_path, sets);
  Dataset ds = load_dataset(dataset_dir);
  for (auto& ev : ds.events) impute_missing(ev.waveforms);

  const TrainConfig tcfg = TrainConfig::from_config(cfg);
  Config model_cfg_defaults;
  model_cfg_defaults.set("model.n_samples", std::to_string(ds.n_samples));
  model_cfg_defaults.overlay(cfg);
  const nn::ModelConfig mcfg = nn::ModelConfig::from_config(model_cfg_defaults);

  std::vector<std::string> ids;
  for (const auto& ev : ds.events) ids.push_back(ev.event_id);
  DatasetSplit split;
  if (folds > 0) {
    if (fold < 0 || fold >= folds) throw UsageError("--fold must be in [0, folds)");
    split = split_folds(ids, folds, tcfg.seed)[fold];
  } else {
    split = split_holdout(ids, train_frac, val_frac, tcfg.seed);
  }

  const auto adj = build_adjacency(ds.network.distances_km, quantile);
  const nn::GraphContext graph = nn::make_graph_context(adj);

  fs::create_directories(out);
  {
    csv::Writer w((fs::path(out) / "split.csv").string());
    w.row({"event_id", "role"});
    for (const auto& id : split.train) w.row({id, "train"});
    for (const auto& id : split.validation) w.row({id, "validation"});
    for (const auto& id : split.test) w.row({id, "test"});
  }

  // resolved config snapshot (defaults + file + overrides)
  Config resolved = tcfg.to_config();
  resolved.overlay(mcfg.to_config());
  resolved.set("graph.quantile", csv::format(quantile));
  {
    std::ofstream snap((fs::path(out) / "config.cfg").string());
    snap << resolved.serialize();
  }

  nn::Model model(mcfg, tcfg.seed);
  std::cout << "model parameters: " << model.count_parameters() << "\n";
  Trainer trainer(ds, split, tcfg, graph, out);
  const auto best = trainer.run(model);
  std::cout << "best validation metric " << short_num(best.metric) << " at epoch "
            << best.epoch << "; checkpoints in " << out << "\n";

  RunManifest manifest("train", argv);
  manifest.set_config(resolved);
  manifest.set_seed(tcfg.seed);
  manifest.add_input_dir(dataset_dir);
  if (!config_path.empty()) manifest.add_input(config_path);
  manifest.add_output_dir(out);
  manifest.write((fs::path(out) / "manifest.json").string());
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& dataset_dir,
                double window_s, const std::string& split_path,
                const std::string& role, double quantile, const std::string& out,
                const std::string& embeddings_out,
                const std::vector<std::string>& argv) {
  nn::Model model = nn::Model::load_checkpoint(checkpoint);
  Dataset ds = load_dataset(dataset_dir);
  for (auto& ev : ds.events) impute_missing(ev.waveforms);
  if (ds.n_samples != model.config().n_samples)
    throw DataError("dataset window (" + std::to_string(ds.n_samples) +
                    " samples) does not match the checkpoint (" +
                    std::to_string(model.config().n_samples) + ")");
  const auto adj = build_adjacency(ds.network.distances_km, quantile);
  const nn::GraphContext graph = nn::make_graph_context(adj);

  std::map<std::string, std::string> roles;
  if (!split_path.empty()) roles = read_split_roles(split_path);

  csv::Writer w(out);
  w.row({"event_id", "station_id", "predicted_intensity"});
  std::unique_ptr<csv::Writer> ew;
  if (!embeddings_out.empty()) {
    ew = std::make_unique<csv::Writer>(embeddings_out);
    std::vector<std::string> header = {"event_id", "station_id"};
    for (int k = 0; k < model.config().embedding_dim; ++k)
      header.push_back("e" + std::to_string(k));
    ew->row(header);
  }
  int n_events = 0;
  for (const auto& ev : ds.events) {
    if (!roles.empty()) {
      const auto it = roles.find(ev.event_id);
      if (it == roles.end() || (!role.empty() && it->second != role)) continue;
    }
    ++n_events;
    const auto input = event_input(ds, ev, window_s);
    const Matrix emb = model.embed(input, graph);
    const Vector pred = model.forward_intensity(emb);
    for (int s = 0; s < ds.network.size(); ++s) {
      w.row({ev.event_id, ds.network.station_ids[s], csv::format(pred(s))});
      if (ew) {
        std::vector<std::string> row = {ev.event_id, ds.network.station_ids[s]};
        for (int k = 0; k < emb.cols(); ++k) row.push_back(csv::format(emb(s, k)));
        ew->row(row);
      }
    }
  }
  std::cout << "predicted " << n_events << " events -> " << out << "\n";

  RunManifest manifest("predict", argv);
  Config cfg;
  cfg.set("window_s", csv::format(window_s));
  cfg.set("graph.quantile", csv::format(quantile));
  manifest.set_config(cfg);
  manifest.add_input(checkpoint);
  manifest.add_input_dir(dataset_dir);
  manifest.add_output(out);
  if (!embeddings_out.empty()) manifest.add_output(embeddings_out);
  manifest.write(out + ".manifest.json");
  return 0;
}

void write_conditional(const std::vector<ConditionalGroup>& groups,
                       const std::string& pairs_path, const std::string& lines_path,
                       const std::string& plot_path, const std::string& title) {
  {
    csv::Writer w(pairs_path);
    w.row({"group", "event_id", "station_id", "observed", "predicted"});
    for (const auto& g : groups)
      for (const auto& p : g.pairs)
        w.row({g.label, p.event_id, p.station_id, csv::format(p.observed),
               csv::format(p.predicted)});
  }
  {
    csv::Writer w(lines_path);
    w.row({"group", "lo", "hi", "n", "slope", "intercept", "degenerate"});
    for (const auto& g : groups)
      w.row({g.label, csv::format(g.lo), csv::format(g.hi),
             std::to_string(g.pairs.size()), csv::format(g.slope),
             csv::format(g.intercept), g.degenerate ? "1" : "0"});
  }
  svg::Plot plot(title, "observed intensity", "predicted intensity");
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c"};
  int ci = 0;
  for (const auto& g : groups) {
    std::vector<double> xs, ys;
    for (const auto& p : g.pairs) {
      xs.push_back(p.observed);
      ys.push_back(p.predicted);
    }
    if (!xs.empty()) plot.scatter(xs, ys, colors[ci % 3]);
    if (!g.degenerate && !xs.empty()) {
      const double lo = *std::min_element(xs.begin(), xs.end());
      const double hi = *std::max_element(xs.begin(), xs.end());
      plot.line({lo, hi}, {g.intercept + g.slope * lo, g.intercept + g.slope * hi},
                colors[ci % 3]);
    }
    ++ci;
  }
  plot.write(plot_path);
}

int cmd_evaluate(const std::string& pred_path, const std::string& labels_path,
                 const std::string& catalog_path, const std::string& stations_path,
                 const std::string& checkpoint, const std::string& dataset_dir,
                 const std::string& split_path, const std::string& role,
                 const std::string& windows_arg, double quantile,
                 const std::string& out, const std::vector<std::string>& argv) {
  fs::create_directories(out);

  // observed labels (PGA rows converted to intensity)
  struct Key {
    std::string ev, st;
    bool operator<(const Key& o) const {
      return ev != o.ev ? ev < o.ev : st < o.st;
    }
  };
  std::map<Key, double> observed;
  {
    const auto t = csv::Table::read(labels_path, true);
    const int c_ev = t.require_column("event_id", labels_path);
    const int c_st = t.require_column("station_id", labels_path);
    const int c_v = t.require_column("value", labels_path);
    const int c_u = t.require_column("unit", labels_path);
    for (const auto& row : t.rows) {
      const double v = csv::to_double(row[c_v], labels_path);
      double intensity;
      if (row[c_u] == "intensity_ems98") intensity = v;
      else if (row[c_u] == "pga_cm_s2") intensity = gmice::pga_to_intensity(v).value;
      else throw DataError(labels_path + ": unknown unit " + row[c_u]);
      observed[{row[c_ev], row[c_st]}] = intensity;
    }
  }

  struct EventMeta {
    double magnitude, depth, lat, lon;
  };
  std::map<std::string, EventMeta> meta;
  {
    const auto t = csv::Table::read(catalog_path, true);
    const int c_ev = t.require_column("event_id", catalog_path);
    const int c_mag = t.require_column("magnitude", catalog_path);
    const int c_dep = t.require_column("depth_km", catalog_path);
    const int c_lat = t.require_column("lat_deg", catalog_path);
    const int c_lon = t.require_column("lon_deg", catalog_path);
    for (const auto& row : t.rows)
      meta[row[c_ev]] = {csv::to_double(row[c_mag], catalog_path),
                         csv::to_double(row[c_dep], catalog_path),
                         csv::to_double(row[c_lat], catalog_path),
                         csv::to_double(row[c_lon], catalog_path)};
  }

  std::map<std::string, std::pair<double, double>> station_coords;
  if (!stations_path.empty()) {
    const auto t = csv::Table::read(stations_path, true);
    const int c_id = t.require_column("station_id", stations_path);
    const int c_lat = t.require_column("latitude_deg", stations_path);
    const int c_lon = t.require_column("longitude_deg", stations_path);
    for (const auto& row : t.rows)
      station_coords[row[c_id]] = {csv::to_double(row[c_lat], stations_path),
                                   csv::to_double(row[c_lon], stations_path)};
  }

  std::map<std::string, std::string> roles;
  if (!split_path.empty()) roles = read_split_roles(split_path);

  ResidualSet rs;
  {
    const auto t = csv::Table::read(pred_path, true);
    const int c_ev = t.require_column("event_id", pred_path);
    const int c_st = t.require_column("station_id", pred_path);
    const int c_p = t.require_column("predicted_intensity", pred_path);
    for (const auto& row : t.rows) {
      const auto obs = observed.find({row[c_ev], row[c_st]});
      if (obs == observed.end()) continue;  // unlabeled station
      if (!roles.empty()) {
        const auto it = roles.find(row[c_ev]);
        if (it == roles.end() || (!role.empty() && it->second != role)) continue;
      }
      ResidualPair p;
      p.event_id = row[c_ev];
      p.station_id = row[c_st];
      p.predicted = csv::to_double(row[c_p], pred_path);
      p.observed = obs->second;
      const auto m = meta.find(p.event_id);
      if (m != meta.end()) {
        p.magnitude = m->second.magnitude;
        p.depth_km = m->second.depth;
        const auto sc = station_coords.find(p.station_id);
        if (sc != station_coords.end())
          p.epicentral_km = haversine_km(sc->second.first, sc->second.second,
                                         m->second.lat, m->second.lon);
      }
      rs.push_back(p);
    }
  }
  if (rs.size() < 2) throw DataError("fewer than 2 (prediction, label) pairs matched");

  const auto m = metrics(rs);
  {
    csv::Writer w((fs::path(out) / "metrics.csv").string());
    w.row({"n", "mse", "sd", "cc_percent", "r2_percent", "normalized_mse",
           "cc_degenerate"});
    w.row({std::to_string(m.n), csv::format(m.mse), csv::format(m.sd),
           csv::format(m.cc_percent), csv::format(m.r2_percent),
           csv::format(m.normalized_mse), m.cc_degenerate ? "1" : "0"});
  }
  const auto ba = bland_altman(rs);
  {
    csv::Writer w((fs::path(out) / "bland_altman.csv").string());
    w.row({"mean_difference", "loa_low", "loa_high", "sd"});
    w.row({csv::format(ba.mean_difference), csv::format(ba.loa_low),
           csv::format(ba.loa_high), csv::format(ba.sd)});
  }
  {
    svg::Plot plot("difference vs mean", "(predicted + observed) / 2",
                   "predicted - observed");
    std::vector<double> xs, ys;
    csv::Writer pw((fs::path(out) / "bland_altman_points.csv").string());
    pw.row({"event_id", "station_id", "mean", "difference"});
    for (const auto& p : rs) {
      xs.push_back(0.5 * (p.predicted + p.observed));
      ys.push_back(p.predicted - p.observed);
      pw.row({p.event_id, p.station_id, csv::format(xs.back()), csv::format(ys.back())});
    }
    plot.scatter(xs, ys, "#1f77b4");
    plot.hline(ba.mean_difference, "#000000");
    plot.hline(ba.loa_low, "#d62728");
    plot.hline(ba.loa_high, "#d62728");
    plot.write((fs::path(out) / "bland_altman.svg").string());
  }

  write_conditional(conditional_groups(rs, GroupAxis::kMagnitude),
                    (fs::path(out) / "conditional_magnitude.csv").string(),
                    (fs::path(out) / "conditional_magnitude_lines.csv").string(),
                    (fs::path(out) / "scatter_magnitude.svg").string(),
                    "predictions by magnitude range");
  write_conditional(conditional_groups(rs, GroupAxis::kDepth),
                    (fs::path(out) / "conditional_depth.csv").string(),
                    (fs::path(out) / "conditional_depth_lines.csv").string(),
                    (fs::path(out) / "scatter_depth.svg").string(),
                    "predictions by depth range");

  if (!checkpoint.empty() && !dataset_dir.empty()) {
    nn::Model model = nn::Model::load_checkpoint(checkpoint);
    Dataset ds = load_dataset(dataset_dir);
    for (auto& ev : ds.events) impute_missing(ev.waveforms);
    const auto adj = build_adjacency(ds.network.distances_km, quantile);
    const nn::GraphContext graph = nn::make_graph_context(adj);
    std::vector<int> event_indices;
    for (std::size_t i = 0; i < ds.events.size(); ++i) {
      if (!roles.empty()) {
        const auto it = roles.find(ds.events[i].event_id);
        if (it == roles.end() || (!role.empty() && it->second != role)) continue;
      }
      if (ds.events[i].has_any_waveform())
        event_indices.push_back(static_cast<int>(i));
    }
    std::vector<double> windows;
    for (const auto& s : csv::split_line(windows_arg))
      windows.push_back(csv::to_double(s, "--windows"));
    const auto rows = window_sweep(model, ds, event_indices, graph, windows);
    csv::Writer w((fs::path(out) / "window_sweep.csv").string());
    w.row({"window_s", "n", "mse", "sd", "cc_percent", "r2_percent",
           "normalized_mse", "skipped"});
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
      if (r.skipped) {
        std::cerr << "warning: window " << r.window_s << " s exceeds the data; skipped\n";
        w.row({csv::format(r.window_s), "0", "", "", "", "", "", "1"});
        continue;
      }
      w.row({csv::format(r.window_s), std::to_string(r.metrics.n),
             csv::format(r.metrics.mse), csv::format(r.metrics.sd),
             csv::format(r.metrics.cc_percent), csv::format(r.metrics.r2_percent),
             csv::format(r.metrics.normalized_mse), "0"});
      xs.push_back(r.window_s);
      ys.push_back(r.metrics.mse);
    }
    svg::Plot plot("error vs input window", "window (s)", "mse");
    plot.line(xs, ys, "#1f77b4");
    plot.scatter(xs, ys, "#1f77b4");
    plot.write((fs::path(out) / "window_sweep.svg").string());
  }

  std::cout << "evaluated " << m.n << " pairs: mse " << short_num(m.mse) << ", sd "
            << short_num(m.sd) << ", cc " << short_num(m.cc_percent) << "%\n";

  RunManifest manifest("evaluate", argv);
  manifest.add_input(pred_path);
  manifest.add_input(labels_path);
  manifest.add_input(catalog_path);
  if (!stations_path.empty()) manifest.add_input(stations_path);
  if (!checkpoint.empty()) manifest.add_input(checkpoint);
  manifest.add_output_dir(out);
  manifest.write((fs::path(out) / "manifest.json").string());
  return 0;
}

int cmd_eew_report(const std::string& dataset_dir, double window_s,
                   double latency_s, bool per_station, const std::string& out,
                   const std::vector<std::string>& argv) {
  Dataset ds = load_dataset(dataset_dir);
  const auto timeline = warning_times(ds, window_s, latency_s, per_station);
  if (timeline.empty()) throw DataError("no available waveforms in the dataset");
  const auto summary = warning_summary(timeline);
  fs::create_directories(out);

  {
    csv::Writer w((fs::path(out) / "timeline.csv").string());
    w.row({"event_id", "station_id", "p_arrival_s", "max_shaking_s",
           "prediction_time_s", "warning_time_s", "epicentral_km", "pick_missing"});
    for (const auto& r : timeline)
      w.row({r.event_id, r.station_id,
             r.pick_missing ? "" : csv::format(r.p_arrival_s),
             csv::format(r.max_shaking_s),
             r.has_timing ? csv::format(r.prediction_time_s) : "",
             r.has_timing ? csv::format(r.warning_time_s) : "",
             csv::format(r.epicentral_km), r.pick_missing ? "1" : "0"});
  }
  {
    csv::Writer w((fs::path(out) / "cdf.csv").string());
    w.row({"warning_time_s", "fraction"});
    for (const auto& [t, f] : summary.cdf)
      w.row({csv::format(t), csv::format(f)});
  }
  {
    csv::Writer w((fs::path(out) / "summary.csv").string());
    w.row({"n", "fraction_ge_10s", "fraction_before_p", "fraction_before_shaking",
           "distance_slope_s_per_km", "distance_intercept_s"});
    w.row({std::to_string(summary.n), csv::format(summary.fraction_ge_10s),
           csv::format(summary.fraction_before_p),
           csv::format(summary.fraction_before_shaking),
           csv::format(summary.distance_slope_s_per_km),
           csv::format(summary.distance_intercept_s)});
  }

  auto histogram = [&](auto value_of, const std::string& csv_path,
                       const std::string& svg_path, const std::string& title,
                       const std::string& xlabel) {
    std::map<long, long> bins;  // 1 s resolution
    long total = 0;
    for (const auto& r : timeline) {
      if (!r.has_timing) continue;
      const double v = value_of(r);
      if (std::isnan(v)) continue;
      ++bins[static_cast<long>(std::floor(v))];
      ++total;
    }
    csv::Writer w(csv_path);
    w.row({"bin_lo_s", "count", "fraction"});
    std::vector<double> xs, ys;
    for (const auto& [b, c] : bins) {
      w.row({std::to_string(b), std::to_string(c),
             csv::format(static_cast<double>(c) / total)});
      xs.push_back(static_cast<double>(b) + 0.5);
      ys.push_back(static_cast<double>(c));
    }
    svg::Plot plot(title, xlabel, "count");
    plot.bars(xs, ys, "#1f77b4");
    plot.write(svg_path);
  };
  histogram([](const WarningRow& r) { return r.p_arrival_s; },
            (fs::path(out) / "p_arrival_hist.csv").string(),
            (fs::path(out) / "p_arrival_hist.svg").string(),
            "P arrival times", "seconds after origin");
  histogram([](const WarningRow& r) { return r.max_shaking_s; },
            (fs::path(out) / "max_shaking_hist.csv").string(),
            (fs::path(out) / "max_shaking_hist.svg").string(),
            "peak shaking times", "seconds after origin");
  {
    svg::Plot plot("warning-time distribution", "warning time (s)", "fraction <= t");
    std::vector<double> xs, ys;
    for (const auto& [t, f] : summary.cdf) {
      xs.push_back(t);
      ys.push_back(f);
    }
    plot.step(xs, ys, "#1f77b4");
    plot.write((fs::path(out) / "warning_cdf.svg").string());
  }
  {
    svg::Plot plot("warning time vs distance", "epicentral distance (km)",
                   "warning time (s)");
    std::vector<double> xs, ys;
    for (const auto& r : timeline) {
      if (!r.has_timing) continue;
      xs.push_back(r.epicentral_km);
      ys.push_back(r.warning_time_s);
    }
    plot.scatter(xs, ys, "#1f77b4");
    const double lo = *std::min_element(xs.begin(), xs.end());
    const double hi = *std::max_element(xs.begin(), xs.end());
    plot.line({lo, hi},
              {summary.distance_intercept_s + summary.distance_slope_s_per_km * lo,
               summary.distance_intercept_s + summary.distance_slope_s_per_km * hi},
              "#d62728");
    plot.write((fs::path(out) / "warning_vs_distance.svg").string());
  }

  std::cout << "warning-time report for " << summary.n << " rows: "
            << short_num(100 * summary.fraction_ge_10s) << "% with >= 10 s, slope "
            << short_num(summary.distance_slope_s_per_km) << " s/km -> " << out
            << "\n";

  RunManifest manifest("eew-report", argv);
  Config cfg;
  cfg.set("window_s", csv::format(window_s));
  cfg.set("latency_s", csv::format(latency_s));
  cfg.set("per_station", per_station ? "true" : "false");
  manifest.set_config(cfg);
  manifest.add_input_dir(dataset_dir);
  manifest.add_output_dir(out);
  manifest.write((fs::path(out) / "manifest.json").string());
  return 0;
}

int cmd_gmice(double pga, double intensity, const std::string& labels_path,
              const std::string& out, const std::vector<std::string>& argv) {
  const int given = (pga == pga ? 1 : 0) + (intensity == intensity ? 1 : 0) +
                    (labels_path.empty() ? 0 : 1);
  if (given != 1)
    throw UsageError("gmice needs exactly one of --pga, --intensity, --labels");
  if (pga == pga) {
    const auto r = gmice::pga_to_intensity(pga);
    std::cout << short_num(r.value);
    if (r.degenerate) std::cout << " (degenerate input, floor applied)";
    else if (r.clamped) std::cout << " (clamped from " << short_num(r.raw) << ")";
    std::cout << "\n";
    return 0;
  }
  if (intensity == intensity) {
    std::cout << short_num(gmice::intensity_to_pga(intensity)) << "\n";
    return 0;
  }
  if (out.empty()) throw UsageError("--labels mode requires --out");
  const auto t = csv::Table::read(labels_path, true);
  const int c_ev = t.require_column("event_id", labels_path);
  const int c_st = t.require_column("station_id", labels_path);
  const int c_v = t.require_column("value", labels_path);
  const int c_u = t.require_column("unit", labels_path);
  csv::Writer w(out);
  w.row({"event_id", "station_id", "intensity_ems98", "clamped", "degenerate"});
  for (const auto& row : t.rows) {
    const double v = csv::to_double(row[c_v], labels_path);
    gmice::IntensityResult r;
    if (row[c_u] == "pga_cm_s2") {
      r = gmice::pga_to_intensity(v);
    } else if (row[c_u] == "intensity_ems98") {
      r.value = v;
    } else {
      throw DataError(labels_path + ": unknown unit " + row[c_u]);
    }
    w.row({row[c_ev], row[c_st], csv::format(r.value), r.clamped ? "1" : "0",
           r.degenerate ? "1" : "0"});
  }
  std::cout << "converted " << t.rows.size() << " rows -> " << out << "\n";
  RunManifest manifest("gmice", argv);
  manifest.add_input(labels_path);
  manifest.add_output(out);
  manifest.write(out + ".manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> raw_args(argv, argv + argc);
  CLI::App app{"seismic intensity prediction pipeline"};
  app.require_subcommand(1);

  const double nan = std::numeric_limits<double>::quiet_NaN();

  // prepare-adjacency
  auto* adj = app.add_subcommand("prepare-adjacency",
                                 "build the station proximity graph from distances");
  std::string adj_distances, adj_out, adj_domain = "offdiag";
  double adj_quantile = 0.75;
  adj->add_option("--distances", adj_distances, "N x N km matrix (headerless CSV)")
      ->required();
  adj->add_option("--quantile", adj_quantile, "sparsification quantile (default 0.75)");
  adj->add_option("--percentile-domain", adj_domain, "offdiag|all (default offdiag)");
  adj->add_option("--out", adj_out, "output weight matrix CSV")->required();

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "generate a synthetic dataset");
  std::string synth_cfg, synth_out;
  std::vector<std::string> synth_sets;
  synth->add_option("--config", synth_cfg, "synth.* config file");
  synth->add_option("--set", synth_sets, "override key=value")->take_all();
  synth->add_option("--out", synth_out, "output dataset directory")->required();

  // augment-preview
  auto* aug = app.add_subcommand("augment-preview",
                                 "show the clip-and-pad batch layout");
  std::string aug_dataset, aug_out;
  int aug_pairs = 4;
  std::uint64_t aug_seed = 1;
  aug->add_option("--dataset", aug_dataset, "dataset directory")->required();
  aug->add_option("--pairs", aug_pairs, "events to pair (default 4)");
  aug->add_option("--seed", aug_seed, "clip draw seed");
  aug->add_option("--out", aug_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "two-phase training");
  std::string train_dataset, train_cfg, train_out;
  std::vector<std::string> train_sets;
  double train_quantile = 0.75, train_frac = 0.70, val_frac = 0.15;
  int train_folds = 0, train_fold = 0;
  train->add_option("--dataset", train_dataset, "dataset directory")->required();
  train->add_option("--config", train_cfg, "train/model/loss config file");
  train->add_option("--set", train_sets, "override key=value")->take_all();
  train->add_option("--quantile", train_quantile, "graph sparsification quantile");
  train->add_option("--folds", train_folds, "k-fold count (0 = holdout split)");
  train->add_option("--fold", train_fold, "fold index for k-fold mode");
  train->add_option("--train-frac", train_frac, "holdout training fraction");
  train->add_option("--val-frac", val_frac, "holdout validation fraction");
  train->add_option("--out", train_out, "run directory")->required();

  // predict
  auto* pred = app.add_subcommand("predict", "intensity inference");
  std::string pred_ckpt, pred_dataset, pred_split, pred_role, pred_out, pred_emb;
  double pred_window = 0.0, pred_quantile = 0.75;
  pred->add_option("--checkpoint", pred_ckpt, "model checkpoint")->required();
  pred->add_option("--dataset", pred_dataset, "dataset directory")->required();
  pred->add_option("--window", pred_window,
                   "input window seconds (0 = full trace)");
  pred->add_option("--split", pred_split, "split.csv from a training run");
  pred->add_option("--role", pred_role, "restrict to train|validation|test");
  pred->add_option("--quantile", pred_quantile, "graph sparsification quantile");
  pred->add_option("--embeddings", pred_emb, "also write station embeddings CSV");
  pred->add_option("--out", pred_out, "predictions CSV")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "metrics and analysis artifacts");
  std::string eval_pred, eval_labels, eval_catalog, eval_stations, eval_ckpt,
      eval_dataset, eval_split, eval_role, eval_out;
  std::string eval_windows = "5,10,15,20,25,30";
  double eval_quantile = 0.75;
  eval->add_option("--pred", eval_pred, "predictions CSV")->required();
  eval->add_option("--labels", eval_labels, "labels CSV")->required();
  eval->add_option("--catalog", eval_catalog, "catalog CSV")->required();
  eval->add_option("--stations", eval_stations, "stations CSV (distance annotations)");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint for the window sweep");
  eval->add_option("--dataset", eval_dataset, "dataset directory for the window sweep");
  eval->add_option("--split", eval_split, "split.csv filter");
  eval->add_option("--role", eval_role, "role filter (e.g. test)");
  eval->add_option("--windows", eval_windows, "comma list of sweep windows (s)");
  eval->add_option("--quantile", eval_quantile, "graph sparsification quantile");
  eval->add_option("--out", eval_out, "report directory")->required();

  // eew-report
  auto* eew = app.add_subcommand("eew-report", "warning-time analysis");
  std::string eew_dataset, eew_out;
  double eew_window = 5.0, eew_latency = 0.0;
  bool eew_per_station = false;
  eew->add_option("--dataset", eew_dataset, "dataset directory")->required();
  eew->add_option("--window", eew_window, "input window seconds (default 5)");
  eew->add_option("--latency", eew_latency, "inference/transmission latency seconds");
  eew->add_flag("--per-station", eew_per_station,
                "per-station prediction instants (own P arrival + window)");
  eew->add_option("--out", eew_out, "report directory")->required();

  // gmice
  auto* gm = app.add_subcommand("gmice", "ground motion <-> intensity conversion");
  double gm_pga = nan, gm_intensity = nan;
  std::string gm_labels, gm_out;
  gm->add_option("--pga", gm_pga, "PGA in cm/s^2 -> intensity");
  gm->add_option("--intensity", gm_intensity, "intensity -> PGA in cm/s^2");
  gm->add_option("--labels", gm_labels, "labels.csv for batch conversion");
  gm->add_option("--out", gm_out, "batch output CSV");

  try {
    app.parse(argc, argv);
    if (adj->parsed())
      return cmd_prepare_adjacency(adj_distances, adj_quantile, adj_domain, adj_out,
                                   raw_args);
    if (synth->parsed()) return cmd_synth_data(synth_cfg, synth_sets, synth_out, raw_args);
    if (aug->parsed())
      return cmd_augment_preview(aug_dataset, aug_pairs, aug_seed, aug_out, raw_args);
    if (train->parsed())
      return cmd_train(train_dataset, train_cfg, train_sets, train_out, train_quantile,
                       train_folds, train_fold, train_frac, val_frac, raw_args);
    if (pred->parsed())
      return cmd_predict(pred_ckpt, pred_dataset, pred_window, pred_split, pred_role,
                         pred_quantile, pred_out, pred_emb, raw_args);
    if (eval->parsed())
      return cmd_evaluate(eval_pred, eval_labels, eval_catalog, eval_stations,
                          eval_ckpt, eval_dataset, eval_split, eval_role, eval_windows,
                          eval_quantile, eval_out, raw_args);
    if (eew->parsed())
      return cmd_eew_report(eew_dataset, eew_window, eew_latency, eew_per_station,
                            eew_out, raw_args);
    if (gm->parsed()) return cmd_gmice(gm_pga, gm_intensity, gm_labels, gm_out, raw_args);
    std::cerr << app.help();
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints usage / help text
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
