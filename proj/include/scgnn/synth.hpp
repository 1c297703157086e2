#pragma once

#include "scgnn/common.hpp"
#include "scgnn/config.hpp"
#include "scgnn/csv.hpp"
#include "scgnn/dataset.hpp"
#include "scgnn/gmice.hpp"
#include "scgnn/rng.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace scgnn {

/// Deterministic synthetic network generator: Ricker-pulse P and S arrivals
/// on a constant-velocity earth with a simple magnitude/distance attenuation
/// law, so that every downstream quantity has a closed-form ground truth.
struct SynthConfig {
  int n_stations = 20;
  double lat_lo = 34.0, lat_hi = 34.6;
  double lon_lo = -117.6, lon_hi = -117.0;
  int n_events = 50;
  double mag_lo = 3.5, mag_hi = 6.0;
  double depth_lo_km = 2.0, depth_hi_km = 15.0;
  double vp_km_s = 6.0;
  double vs_km_s = 3.5;
  // log10(PGA cm/s^2) = a * M - b * log10(R_hypo + c)
  double atten_a = 1.0, atten_b = 1.8, atten_c = 10.0;
  double noise_amplitude = 0.01;  // gaussian sd, cm/s^2
  double missing_fraction = 0.0;
  double duration_s = 30.0;
  std::uint64_t seed = 42;
  bool labels_as_pga = true;  // ship labels.csv in pga_cm_s2 rather than intensity

  void validate() const {
    if (n_stations < 2) throw UsageError("need at least 2 stations");
    if (n_events < 1) throw UsageError("need at least 1 event");
    if (!(vp_km_s > vs_km_s && vs_km_s > 0))
      throw UsageError("velocities must satisfy vp > vs > 0");
    if (mag_lo < 2.0 || mag_hi > 7.0 || mag_lo > mag_hi)
      throw UsageError("magnitude range must lie within [2, 7]");
    if (lat_hi <= lat_lo || lon_hi <= lon_lo)
      throw UsageError("region box is empty");
    if (missing_fraction < 0.0 || missing_fraction >= 1.0)
      throw UsageError("missing fraction must be in [0, 1)");
    if (duration_s < 2.0) throw UsageError("duration must be at least 2 s");
  }

  static SynthConfig from_config(const Config& c) {
    SynthConfig s;
    s.n_stations = static_cast<int>(c.get_long("synth.n_stations", s.n_stations));
    s.lat_lo = c.get_double("synth.lat_lo", s.lat_lo);
    s.lat_hi = c.get_double("synth.lat_hi", s.lat_hi);
    s.lon_lo = c.get_double("synth.lon_lo", s.lon_lo);
    s.lon_hi = c.get_double("synth.lon_hi", s.lon_hi);
    s.n_events = static_cast<int>(c.get_long("synth.n_events", s.n_events));
    s.mag_lo = c.get_double("synth.mag_lo", s.mag_lo);
    s.mag_hi = c.get_double("synth.mag_hi", s.mag_hi);
    s.depth_lo_km = c.get_double("synth.depth_lo_km", s.depth_lo_km);
    s.depth_hi_km = c.get_double("synth.depth_hi_km", s.depth_hi_km);
    s.vp_km_s = c.get_double("synth.vp_km_s", s.vp_km_s);
    s.vs_km_s = c.get_double("synth.vs_km_s", s.vs_km_s);
    s.atten_a = c.get_double("synth.atten_a", s.atten_a);
    s.atten_b = c.get_double("synth.atten_b", s.atten_b);
    s.atten_c = c.get_double("synth.atten_c", s.atten_c);
    s.noise_amplitude = c.get_double("synth.noise_amplitude", s.noise_amplitude);
    s.missing_fraction = c.get_double("synth.missing_fraction", s.missing_fraction);
    s.duration_s = c.get_double("synth.duration_s", s.duration_s);
    s.seed = static_cast<std::uint64_t>(c.get_long("synth.seed", static_cast<long>(s.seed)));
    s.labels_as_pga = c.get_bool("synth.labels_as_pga", s.labels_as_pga);
    s.validate();
    return s;
  }
};

struct TruthRow {
  std::string event_id;
  std::string station_id;
  double epicentral_km = 0.0;
  double hypocentral_km = 0.0;
  double p_arrival_s = 0.0;
  double s_arrival_s = 0.0;
  double pga_cm_s2 = 0.0;
  double intensity = 0.0;
  bool available = true;
};

struct SynthResult {
  Dataset dataset;
  std::vector<TruthRow> truth;
};

namespace detail {

inline double ricker(double t, double t0, double freq_hz) {
  const double arg = std::numbers::pi * freq_hz * (t - t0);
  const double a2 = arg * arg;
  return (1.0 - 2.0 * a2) * std::exp(-a2);
}

}  // namespace detail

inline SynthResult synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SynthResult out;
  Dataset& ds = out.dataset;
  ds.n_samples = static_cast<int>(cfg.duration_s * kSamplingRateHz + 0.5);

  // stations: uniform with a minimum separation so distances stay positive
  const double min_sep_deg = 0.004;
  StationNetwork& net = ds.network;
  int attempts = 0;
  while (net.size() < cfg.n_stations) {
    if (++attempts > 1000 * cfg.n_stations)
      throw DataError("region too small to place " + std::to_string(cfg.n_stations) +
                      " stations with positive separation");
    const double lat = rng.uniform(cfg.lat_lo, cfg.lat_hi);
    const double lon = rng.uniform(cfg.lon_lo, cfg.lon_hi);
    bool ok = true;
    for (int i = 0; i < net.size(); ++i) {
      if (std::abs(net.latitudes_deg[i] - lat) < min_sep_deg &&
          std::abs(net.longitudes_deg[i] - lon) < min_sep_deg) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    char id[16];
    std::snprintf(id, sizeof(id), "ST%03d", net.size());
    net.station_ids.push_back(id);
    net.latitudes_deg.push_back(lat);
    net.longitudes_deg.push_back(lon);
  }
  const int n = cfg.n_stations;
  net.distances_km.setZero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = haversine_km(net.latitudes_deg[i], net.longitudes_deg[i],
                                    net.latitudes_deg[j], net.longitudes_deg[j]);
      net.distances_km(i, j) = d;
      net.distances_km(j, i) = d;
    }

  const double margin_s = 1.0;  // keep the S pulse inside the trace
  for (int e = 0; e < cfg.n_events; ++e) {
    Rng ev_rng = rng.child(static_cast<std::uint64_t>(e) + 1);
    EventSample ev;
    char id[16];
    std::snprintf(id, sizeof(id), "EV%04d", e);
    ev.event_id = id;
    ev.origin_time_epoch_s = 1.6e9 + 3600.0 * e;
    ev.epicenter_lat_deg = ev_rng.uniform(cfg.lat_lo, cfg.lat_hi);
    ev.epicenter_lon_deg = ev_rng.uniform(cfg.lon_lo, cfg.lon_hi);
    ev.depth_km = ev_rng.uniform(cfg.depth_lo_km, cfg.depth_hi_km);
    ev.magnitude = ev_rng.uniform(cfg.mag_lo, cfg.mag_hi);
    ev.waveforms.resize(n);
    ev.labels.assign(n, 0.0);
    ev.label_valid.assign(n, true);
    ev.label_source.assign(n, cfg.labels_as_pga ? LabelSource::kConvertedFromPga
                                                : LabelSource::kIntensityFile);
    ev.p_arrival_s.assign(n, std::nullopt);

    for (int s = 0; s < n; ++s) {
      const double epi = haversine_km(net.latitudes_deg[s], net.longitudes_deg[s],
                                      ev.epicenter_lat_deg, ev.epicenter_lon_deg);
      const double hyp = std::sqrt(epi * epi + ev.depth_km * ev.depth_km);
      const double tp = hyp / cfg.vp_km_s;
      const double ts = hyp / cfg.vs_km_s;
      if (ts > cfg.duration_s - margin_s)
        throw DataError("S arrival " + std::to_string(ts) +
                        "s falls outside the trace; shrink the region or extend "
                        "synth.duration_s");
      const double pga =
          std::pow(10.0, cfg.atten_a * ev.magnitude -
                             cfg.atten_b * std::log10(hyp + cfg.atten_c));
      TruthRow tr;
      tr.event_id = ev.event_id;
      tr.station_id = net.station_ids[s];
      tr.epicentral_km = epi;
      tr.hypocentral_km = hyp;
      tr.p_arrival_s = tp;
      tr.s_arrival_s = ts;
      tr.pga_cm_s2 = pga;
      tr.intensity = gmice::pga_to_intensity(pga).value;

      WaveformRecord& w = ev.waveforms[s];
      w.samples.setZero(ds.n_samples, kComponents);
      const bool missing = ev_rng.uniform() < cfg.missing_fraction;
      w.available = !missing;
      tr.available = !missing;
      if (!missing) {
        // S energy mostly horizontal, P mostly vertical; unit directions keep
        // the vector-magnitude peak equal to the target amplitude
        const double az = ev_rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double sv = 0.2;
        const double sh = std::sqrt(1.0 - sv * sv);
        const double s_dir[3] = {sh * std::cos(az), sh * std::sin(az), sv};
        const double pv = 0.95;
        const double ph = std::sqrt(1.0 - pv * pv);
        const double p_dir[3] = {ph * std::cos(az), ph * std::sin(az), pv};
        const double p_amp = 0.3 * pga;
        for (int t = 0; t < ds.n_samples; ++t) {
          const double time = t / kSamplingRateHz;
          const double p_pulse = p_amp * detail::ricker(time, tp, 5.0);
          const double s_pulse = pga * detail::ricker(time, ts, 2.0);
          for (int c = 0; c < kComponents; ++c) {
            const double noise = cfg.noise_amplitude * ev_rng.normal();
            w.samples(t, c) = static_cast<float>(p_pulse * p_dir[c] +
                                                 s_pulse * s_dir[c] + noise);
          }
        }
        ev.p_arrival_s[s] = tp;
      }
      ev.labels[s] = tr.intensity;
      out.truth.push_back(tr);
    }
    ds.events.push_back(std::move(ev));
  }
  return out;
}

/// Writes the dataset directory plus truth.csv. Labels go out as raw PGA by
/// default so ingestion exercises the conversion path.
inline void synth_write(const SynthConfig& cfg, const SynthResult& result,
                        const std::string& dir) {
  namespace fs = std::filesystem;
  save_dataset(result.dataset, dir);
  if (cfg.labels_as_pga) {
    csv::Writer w((fs::path(dir) / "labels.csv").string());
    w.row({"event_id", "station_id", "value", "unit"});
    for (const auto& t : result.truth)
      w.row({t.event_id, t.station_id, csv::format(t.pga_cm_s2), "pga_cm_s2"});
  }
  csv::Writer tw((fs::path(dir) / "truth.csv").string());
  tw.row({"event_id", "station_id", "epicentral_km", "hypocentral_km", "p_arrival_s",
          "s_arrival_s", "pga_cm_s2", "intensity", "available"});
  for (const auto& t : result.truth)
    tw.row({t.event_id, t.station_id, csv::format(t.epicentral_km),
            csv::format(t.hypocentral_km), csv::format(t.p_arrival_s),
            csv::format(t.s_arrival_s), csv::format(t.pga_cm_s2),
            csv::format(t.intensity), t.available ? "1" : "0"});
}

}  // namespace scgnn
