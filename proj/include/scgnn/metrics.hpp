#pragma once

#include "scgnn/common.hpp"
#include "scgnn/dataset.hpp"
#include "scgnn/nn/model.hpp"
#include "scgnn/training.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace scgnn {

/// One (predicted, observed) intensity pair with its annotations.
struct ResidualPair {
  std::string event_id;
  std::string station_id;
  double predicted = 0.0;
  double observed = 0.0;
  double magnitude = std::numeric_limits<double>::quiet_NaN();
  double depth_km = std::numeric_limits<double>::quiet_NaN();
  double epicentral_km = std::numeric_limits<double>::quiet_NaN();
};

using ResidualSet = std::vector<ResidualPair>;

struct MetricsResult {
  double mse = 0.0;
  double sd = 0.0;              // population standard deviation of the error
  double cc_percent = 0.0;      // Pearson correlation * 100
  double r2_percent = 0.0;      // squared correlation * 100
  double normalized_mse = 0.0;  // mse / mean(observed)
  long n = 0;
  bool cc_degenerate = false;
};

inline MetricsResult metrics(const ResidualSet& rs) {
  const long n = static_cast<long>(rs.size());
  if (n < 2) throw UsageError("metrics need at least 2 pairs");
  MetricsResult m;
  m.n = n;
  double se = 0.0, sum_err = 0.0, sum_obs = 0.0, sum_pred = 0.0;
  for (const auto& p : rs) {
    const double e = p.predicted - p.observed;
    se += e * e;
    sum_err += e;
    sum_obs += p.observed;
    sum_pred += p.predicted;
  }
  m.mse = se / n;
  const double mean_err = sum_err / n;
  double var_err = 0.0;
  for (const auto& p : rs) {
    const double e = p.predicted - p.observed - mean_err;
    var_err += e * e;
  }
  m.sd = std::sqrt(var_err / n);

  const double mp = sum_pred / n, mo = sum_obs / n;
  double cross = 0.0, vp = 0.0, vo = 0.0;
  for (const auto& p : rs) {
    cross += (p.predicted - mp) * (p.observed - mo);
    vp += (p.predicted - mp) * (p.predicted - mp);
    vo += (p.observed - mo) * (p.observed - mo);
  }
  if (vp < 1e-24 || vo < 1e-24) {
    m.cc_degenerate = true;
    m.cc_percent = 0.0;
    m.r2_percent = 0.0;
  } else {
    const double r = cross / std::sqrt(vp * vo);
    m.cc_percent = 100.0 * r;
    m.r2_percent = 100.0 * r * r;
  }
  m.normalized_mse = m.mse / mo;
  return m;
}

struct BlandAltmanResult {
  double mean_difference = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
  double sd = 0.0;
};

/// Differences d = predicted - observed; limits of agreement at +-1.96 sd.
inline BlandAltmanResult bland_altman(const ResidualSet& rs) {
  const long n = static_cast<long>(rs.size());
  if (n < 2) throw UsageError("bland-altman needs at least 2 pairs");
  double sum = 0.0;
  for (const auto& p : rs) sum += p.predicted - p.observed;
  const double mean = sum / n;
  double var = 0.0;
  for (const auto& p : rs) {
    const double d = p.predicted - p.observed - mean;
    var += d * d;
  }
  const double sd = std::sqrt(var / n);
  BlandAltmanResult b;
  b.mean_difference = mean;
  b.sd = sd;
  b.loa_low = mean - 1.96 * sd;
  b.loa_high = mean + 1.96 * sd;
  return b;
}

enum class GroupAxis { kMagnitude, kDepth };

struct ConditionalGroup {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;  // exclusive upper edge; +inf for the open bin
  ResidualSet pairs;
  double slope = 0.0;      // least squares of predicted vs observed
  double intercept = 0.0;
  bool degenerate = false; // fewer than 2 pairs or constant observed
};

inline void fit_line(ConditionalGroup& g) {
  const long n = static_cast<long>(g.pairs.size());
  if (n < 2) {
    g.degenerate = true;
    return;
  }
  double mx = 0.0, my = 0.0;
  for (const auto& p : g.pairs) {
    mx += p.observed;
    my += p.predicted;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : g.pairs) {
    sxx += (p.observed - mx) * (p.observed - mx);
    sxy += (p.observed - mx) * (p.predicted - my);
  }
  if (sxx < 1e-24) {
    g.degenerate = true;
    g.intercept = my;
    return;
  }
  g.slope = sxy / sxx;
  g.intercept = my - g.slope * mx;
}

/// Splits pairs into the published magnitude bins [3,3.5), [3.5,4.5), [4.5,inf)
/// or depth bins [1,8), [8,10), [10,inf) and fits one line per bin.
inline std::vector<ConditionalGroup> conditional_groups(const ResidualSet& rs,
                                                        GroupAxis axis) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<ConditionalGroup> groups;
  if (axis == GroupAxis::kMagnitude) {
    groups.push_back({"magnitude_3_3.5", 3.0, 3.5, {}, 0, 0, false});
    groups.push_back({"magnitude_3.5_4.5", 3.5, 4.5, {}, 0, 0, false});
    groups.push_back({"magnitude_over_4.5", 4.5, inf, {}, 0, 0, false});
  } else {
    groups.push_back({"depth_1_8km", 1.0, 8.0, {}, 0, 0, false});
    groups.push_back({"depth_8_10km", 8.0, 10.0, {}, 0, 0, false});
    groups.push_back({"depth_over_10km", 10.0, inf, {}, 0, 0, false});
  }
  for (const auto& p : rs) {
    const double v = axis == GroupAxis::kMagnitude ? p.magnitude : p.depth_km;
    if (std::isnan(v)) continue;
    for (auto& g : groups) {
      if (v >= g.lo && v < g.hi) {
        g.pairs.push_back(p);
        break;
      }
    }
  }
  for (auto& g : groups) fit_line(g);
  return groups;
}

struct WindowSweepRow {
  double window_s = 0.0;
  MetricsResult metrics;
  bool skipped = false;
};

/// Clips every input to each window and re-evaluates the model on the given
/// events. Windows longer than the data are skipped with a note.
inline std::vector<WindowSweepRow> window_sweep(
    nn::Model& model, const Dataset& ds, const std::vector<int>& event_indices,
    const nn::GraphContext& graph, const std::vector<double>& windows_s) {
  std::vector<WindowSweepRow> rows;
  const double full_s = ds.n_samples / kSamplingRateHz;
  for (double w : windows_s) {
    WindowSweepRow row;
    row.window_s = w;
    if (w > full_s + 1e-9) {
      row.skipped = true;
      rows.push_back(row);
      continue;
    }
    ResidualSet rs;
    for (int ei : event_indices) {
      const EventSample& ev = ds.events[ei];
      const Vector pred = model.predict(event_input(ds, ev, w), graph);
      for (int s = 0; s < ds.network.size(); ++s) {
        if (!ev.label_valid[s]) continue;
        ResidualPair p;
        p.event_id = ev.event_id;
        p.station_id = ds.network.station_ids[s];
        p.predicted = pred(s);
        p.observed = ev.labels[s];
        p.magnitude = ev.magnitude;
        p.depth_km = ev.depth_km;
        p.epicentral_km =
            haversine_km(ds.network.latitudes_deg[s], ds.network.longitudes_deg[s],
                         ev.epicenter_lat_deg, ev.epicenter_lon_deg);
        rs.push_back(p);
      }
    }
    row.metrics = metrics(rs);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace scgnn
