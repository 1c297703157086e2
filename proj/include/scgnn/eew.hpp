#pragma once

#include "scgnn/common.hpp"
#include "scgnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace scgnn {

/// Instant of peak 3-component vector magnitude, seconds after the trace
/// start. Ties resolve to the earliest sample; all-zero traces have no peak.
inline std::optional<double> max_shaking_time(const MatrixF& samples,
                                              double sampling_rate_hz = kSamplingRateHz) {
  long best = -1;
  double best_v = 0.0;
  for (long t = 0; t < samples.rows(); ++t) {
    const double v = static_cast<double>(samples(t, 0)) * samples(t, 0) +
                     static_cast<double>(samples(t, 1)) * samples(t, 1) +
                     static_cast<double>(samples(t, 2)) * samples(t, 2);
    if (v > best_v) {
      best_v = v;
      best = t;
    }
  }
  if (best < 0) return std::nullopt;
  return static_cast<double>(best) / sampling_rate_hz;
}

struct WarningRow {
  std::string event_id;
  std::string station_id;
  double p_arrival_s = std::numeric_limits<double>::quiet_NaN();
  double max_shaking_s = 0.0;
  double prediction_time_s = 0.0;
  double warning_time_s = 0.0;
  double epicentral_km = 0.0;
  bool pick_missing = false;
  bool has_timing = true;  // false for per-station rows without a pick
};

using WarningTimeline = std::vector<WarningRow>;

/// Builds the per-(event, station) warning timeline. In the default regional
/// mode one prediction instant (window + latency after origin) covers the
/// whole network; in per-station mode each station waits for its own P
/// arrival plus the window.
inline WarningTimeline warning_times(const Dataset& ds, double window_s,
                                     double latency_s, bool per_station = false) {
  WarningTimeline rows;
  for (const auto& ev : ds.events) {
    for (int s = 0; s < ds.network.size(); ++s) {
      const auto& w = ev.waveforms[s];
      if (!w.available) continue;
      const auto peak = max_shaking_time(w.samples);
      if (!peak) continue;  // all-zero trace, undefined peak
      WarningRow row;
      row.event_id = ev.event_id;
      row.station_id = ds.network.station_ids[s];
      row.max_shaking_s = *peak;
      if (ev.p_arrival_s[s]) {
        row.p_arrival_s = *ev.p_arrival_s[s];
      } else {
        row.pick_missing = true;
      }
      row.epicentral_km =
          haversine_km(ds.network.latitudes_deg[s], ds.network.longitudes_deg[s],
                       ev.epicenter_lat_deg, ev.epicenter_lon_deg);
      if (per_station) {
        if (row.pick_missing) {
          row.has_timing = false;
          rows.push_back(row);
          continue;
        }
        row.prediction_time_s = row.p_arrival_s + window_s + latency_s;
      } else {
        row.prediction_time_s = window_s + latency_s;
      }
      row.warning_time_s = row.max_shaking_s - row.prediction_time_s;
      rows.push_back(row);
    }
  }
  return rows;
}

struct WarningSummary {
  std::vector<std::pair<double, double>> cdf;  // (t, fraction warning <= t) on a 0.5 s grid
  double fraction_ge_10s = 0.0;
  double fraction_before_p = 0.0;        // prediction available before P arrival
  double fraction_before_shaking = 0.0;  // positive warning time
  double distance_slope_s_per_km = 0.0;  // least squares warning vs distance
  double distance_intercept_s = 0.0;
  long n = 0;
};

inline WarningSummary warning_summary(const WarningTimeline& timeline) {
  WarningSummary s;
  std::vector<const WarningRow*> rows;
  for (const auto& r : timeline)
    if (r.has_timing) rows.push_back(&r);
  s.n = static_cast<long>(rows.size());
  if (s.n == 0) throw UsageError("warning summary needs a non-empty timeline");

  std::vector<double> wt;
  long before_p = 0, with_pick = 0, before_shaking = 0, ge10 = 0;
  double mx = 0.0, my = 0.0;
  for (const WarningRow* r : rows) {
    wt.push_back(r->warning_time_s);
    if (!r->pick_missing) {
      ++with_pick;
      if (r->prediction_time_s <= r->p_arrival_s) ++before_p;
    }
    if (r->warning_time_s > 0.0) ++before_shaking;
    if (r->warning_time_s >= 10.0) ++ge10;
    mx += r->epicentral_km;
    my += r->warning_time_s;
  }
  s.fraction_ge_10s = static_cast<double>(ge10) / s.n;
  s.fraction_before_shaking = static_cast<double>(before_shaking) / s.n;
  s.fraction_before_p =
      with_pick > 0 ? static_cast<double>(before_p) / with_pick : 0.0;

  mx /= s.n;
  my /= s.n;
  double sxx = 0.0, sxy = 0.0;
  for (const WarningRow* r : rows) {
    sxx += (r->epicentral_km - mx) * (r->epicentral_km - mx);
    sxy += (r->epicentral_km - mx) * (r->warning_time_s - my);
  }
  if (sxx > 1e-24) {
    s.distance_slope_s_per_km = sxy / sxx;
    s.distance_intercept_s = my - s.distance_slope_s_per_km * mx;
  }

  // empirical CDF on a half-second grid
  const double lo = std::floor(*std::min_element(wt.begin(), wt.end()) * 2.0) / 2.0;
  const double hi = std::ceil(*std::max_element(wt.begin(), wt.end()) * 2.0) / 2.0;
  for (double t = lo; t <= hi + 1e-9; t += 0.5) {
    long count = 0;
    for (double v : wt)
      if (v <= t + 1e-12) ++count;
    s.cdf.emplace_back(t, static_cast<double>(count) / s.n);
  }
  return s;
}

}  // namespace scgnn
