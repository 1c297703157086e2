#pragma once

#include "scgnn/common.hpp"
#include "scgnn/csv.hpp"
#include "scgnn/gmice.hpp"
#include "scgnn/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace scgnn {

/// Station geometry and pairwise great-circle distances in km.
struct StationNetwork {
  std::vector<std::string> station_ids;
  std::vector<double> latitudes_deg;
  std::vector<double> longitudes_deg;
  Matrix distances_km;  // N x N, symmetric, zero diagonal

  int size() const { return static_cast<int>(station_ids.size()); }

  int index_of(const std::string& id) const {
    for (int i = 0; i < size(); ++i)
      if (station_ids[i] == id) return i;
    return -1;
  }
};

/// One 3-component 100 Hz recording for a single (event, station).
/// Missing recordings are all-zero with available = false.
struct WaveformRecord {
  MatrixF samples;  // n_samples x 3, float32 storage for bit-exact interchange
  bool available = false;

  int n_samples() const { return static_cast<int>(samples.rows()); }
};

enum class LabelSource { kNone, kIntensityFile, kConvertedFromPga };

struct EventSample {
  std::string event_id;
  double origin_time_epoch_s = 0.0;
  double epicenter_lat_deg = 0.0;
  double epicenter_lon_deg = 0.0;
  double depth_km = 0.0;
  double magnitude = 0.0;
  std::vector<WaveformRecord> waveforms;        // one per station
  std::vector<double> labels;                   // EMS-98 intensity
  std::vector<bool> label_valid;
  std::vector<LabelSource> label_source;
  std::vector<std::optional<double>> p_arrival_s;  // after origin, if picked

  bool has_any_waveform() const {
    for (const auto& w : waveforms)
      if (w.available) return true;
    return false;
  }
};

struct Dataset {
  StationNetwork network;
  std::vector<EventSample> events;
  int n_samples = 0;

  const EventSample* find_event(const std::string& id) const {
    for (const auto& e : events)
      if (e.event_id == id) return &e;
    return nullptr;
  }
};

/// Event-level train/validation/test partition.
struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  int fold_index = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline double deg2rad(double d) { return d * 0.017453292519943295; }

}  // namespace detail

/// Great-circle distance (haversine, mean Earth radius 6371 km).
inline double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  using detail::deg2rad;
  const double dlat = deg2rad(lat2 - lat1);
  const double dlon = deg2rad(lon2 - lon1);
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(deg2rad(lat1)) * std::cos(deg2rad(lat2)) *
                       std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * 6371.0 * std::asin(std::min(1.0, std::sqrt(a)));
}

/// Zero out every unavailable record. Available records are untouched.
inline void impute_missing(std::vector<WaveformRecord>& waveforms) {
  for (auto& w : waveforms)
    if (!w.available) w.samples.setZero();
}

/// Deterministic k-fold partition by event. Fold i uses fold i as test,
/// fold (i+1) mod k as validation, and the rest as training.
inline std::vector<DatasetSplit> split_folds(
    const std::vector<std::string>& event_ids, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("fold count must be >= 2");
  if (static_cast<std::size_t>(k) > event_ids.size())
    throw UsageError("fold count " + std::to_string(k) + " exceeds event count " +
                     std::to_string(event_ids.size()));
  std::vector<std::string> ids = event_ids;
  Rng rng(seed);
  rng.shuffle(ids);

  const std::size_t n = ids.size();
  std::vector<std::vector<std::string>> folds(k);
  // first (n % k) folds get one extra event
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    std::size_t len = n / k + (static_cast<std::size_t>(f) < n % k ? 1 : 0);
    folds[f].assign(ids.begin() + pos, ids.begin() + pos + len);
    pos += len;
  }

  std::vector<DatasetSplit> splits(k);
  for (int f = 0; f < k; ++f) {
    DatasetSplit& s = splits[f];
    s.fold_index = f;
    s.seed = seed;
    s.test = folds[f];
    s.validation = folds[(f + 1) % k];
    for (int g = 0; g < k; ++g)
      if (g != f && g != (f + 1) % k)
        s.train.insert(s.train.end(), folds[g].begin(), folds[g].end());
  }
  return splits;
}

/// Single holdout split by event with the given fractions.
inline DatasetSplit split_holdout(const std::vector<std::string>& event_ids,
                                  double train_frac, double val_frac,
                                  std::uint64_t seed) {
  if (train_frac <= 0 || val_frac < 0 || train_frac + val_frac >= 1.0)
    throw UsageError("holdout fractions must satisfy 0 < train, 0 <= val, train+val < 1");
  std::vector<std::string> ids = event_ids;
  Rng rng(seed);
  rng.shuffle(ids);
  DatasetSplit s;
  s.seed = seed;
  const auto n = ids.size();
  const auto n_train = static_cast<std::size_t>(train_frac * n);
  const auto n_val = static_cast<std::size_t>(val_frac * n);
  s.train.assign(ids.begin(), ids.begin() + n_train);
  s.validation.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  s.test.assign(ids.begin() + n_train + n_val, ids.end());
  return s;
}

// ---------------------------------------------------------------------------
// Directory ingestion. Layout (all CSV files UTF-8 with a header row unless
// noted): stations.csv, distances.csv (headerless N x N km), catalog.csv,
// labels.csv, mask.csv, picks.csv (optional), waveforms.hdr + waveforms.bin.
// ---------------------------------------------------------------------------

namespace detail {

inline std::unordered_map<std::string, std::string> read_header_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing or unreadable file: " + path);
  std::unordered_map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = csv::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw DataError(path + ": malformed header line '" + t + "'");
    kv[csv::trim(t.substr(0, eq))] = csv::trim(t.substr(eq + 1));
  }
  return kv;
}

inline std::string hdr_field(
    const std::unordered_map<std::string, std::string>& kv,
    const std::string& key, const std::string& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw DataError(path + ": missing header field " + key);
  return it->second;
}

}  // namespace detail

inline StationNetwork load_station_network(const std::string& root) {
  namespace fs = std::filesystem;
  const std::string stations_path = (fs::path(root) / "stations.csv").string();
  const std::string dist_path = (fs::path(root) / "distances.csv").string();

  StationNetwork net;
  const auto st = csv::Table::read(stations_path, /*has_header=*/true);
  const int c_id = st.require_column("station_id", stations_path);
  const int c_lat = st.require_column("latitude_deg", stations_path);
  const int c_lon = st.require_column("longitude_deg", stations_path);
  for (const auto& row : st.rows) {
    net.station_ids.push_back(row[c_id]);
    net.latitudes_deg.push_back(csv::to_double(row[c_lat], stations_path));
    net.longitudes_deg.push_back(csv::to_double(row[c_lon], stations_path));
  }
  const int n = net.size();
  if (n < 2) throw DataError(stations_path + ": need at least 2 stations");

  const auto dt = csv::Table::read(dist_path, /*has_header=*/false);
  if (static_cast<int>(dt.rows.size()) != n)
    throw DataError(dist_path + ": expected " + std::to_string(n) + " rows, got " +
                    std::to_string(dt.rows.size()));
  net.distances_km.resize(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(dt.rows[i].size()) != n)
      throw DataError(dist_path + ": row " + std::to_string(i) + " has " +
                      std::to_string(dt.rows[i].size()) + " columns, expected " +
                      std::to_string(n));
    for (int j = 0; j < n; ++j)
      net.distances_km(i, j) = csv::to_double(dt.rows[i][j], dist_path);
  }
  for (int i = 0; i < n; ++i) {
    if (net.distances_km(i, i) != 0.0)
      throw DataError(dist_path + ": diagonal entry [" + std::to_string(i) + "][" +
                      std::to_string(i) + "] must be 0");
    for (int j = i + 1; j < n; ++j) {
      if (net.distances_km(i, j) != net.distances_km(j, i))
        throw DataError(dist_path + ": asymmetric distances at [" +
                        std::to_string(i) + "][" + std::to_string(j) + "]");
      if (net.distances_km(i, j) <= 0.0)
        throw DataError(dist_path + ": non-positive distance at [" +
                        std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  return net;
}

inline Dataset load_dataset(const std::string& root) {
  namespace fs = std::filesystem;
  Dataset ds;
  ds.network = load_station_network(root);
  const int n_st = ds.network.size();

  // catalog
  const std::string cat_path = (fs::path(root) / "catalog.csv").string();
  const auto cat = csv::Table::read(cat_path, true);
  const int c_ev = cat.require_column("event_id", cat_path);
  const int c_t = cat.require_column("origin_time_epoch_s", cat_path);
  const int c_lat = cat.require_column("lat_deg", cat_path);
  const int c_lon = cat.require_column("lon_deg", cat_path);
  const int c_dep = cat.require_column("depth_km", cat_path);
  const int c_mag = cat.require_column("magnitude", cat_path);
  std::unordered_map<std::string, int> event_index;
  for (const auto& row : cat.rows) {
    EventSample ev;
    ev.event_id = row[c_ev];
    ev.origin_time_epoch_s = csv::to_double(row[c_t], cat_path);
    ev.epicenter_lat_deg = csv::to_double(row[c_lat], cat_path);
    ev.epicenter_lon_deg = csv::to_double(row[c_lon], cat_path);
    ev.depth_km = csv::to_double(row[c_dep], cat_path);
    ev.magnitude = csv::to_double(row[c_mag], cat_path);
    ev.labels.assign(n_st, 0.0);
    ev.label_valid.assign(n_st, false);
    ev.label_source.assign(n_st, LabelSource::kNone);
    ev.p_arrival_s.assign(n_st, std::nullopt);
    if (event_index.count(ev.event_id))
      throw DataError(cat_path + ": duplicate event_id " + ev.event_id);
    event_index[ev.event_id] = static_cast<int>(ds.events.size());
    ds.events.push_back(std::move(ev));
  }
  if (ds.events.empty()) throw DataError(cat_path + ": no events");

  auto station_of = [&](const std::string& id, const std::string& ctx) {
    const int s = ds.network.index_of(id);
    if (s < 0) throw DataError(ctx + ": unknown station_id " + id);
    return s;
  };
  auto event_of = [&](const std::string& id, const std::string& ctx) {
    const auto it = event_index.find(id);
    if (it == event_index.end()) throw DataError(ctx + ": unknown event_id " + id);
    return it->second;
  };

  // waveform container
  const std::string hdr_path = (fs::path(root) / "waveforms.hdr").string();
  const std::string bin_path = (fs::path(root) / "waveforms.bin").string();
  const auto hdr = detail::read_header_file(hdr_path);
  const long n_events = csv::to_long(detail::hdr_field(hdr, "n_events", hdr_path), hdr_path);
  const long n_stations = csv::to_long(detail::hdr_field(hdr, "n_stations", hdr_path), hdr_path);
  const long n_samples = csv::to_long(detail::hdr_field(hdr, "n_samples", hdr_path), hdr_path);
  const long n_comp = csv::to_long(detail::hdr_field(hdr, "n_components", hdr_path), hdr_path);
  const std::string order = detail::hdr_field(hdr, "order", hdr_path);
  const std::string dtype = detail::hdr_field(hdr, "dtype", hdr_path);
  if (dtype != "f32le") throw DataError(hdr_path + ": dtype must be f32le, got " + dtype);
  if (order != "event,station,sample,component")
    throw DataError(hdr_path + ": unsupported order '" + order + "'");
  if (n_comp != kComponents)
    throw DataError(hdr_path + ": n_components must be 3, got " + std::to_string(n_comp));
  if (n_events != static_cast<long>(ds.events.size()))
    throw DataError(hdr_path + ": n_events=" + std::to_string(n_events) +
                    " does not match catalog (" + std::to_string(ds.events.size()) + ")");
  if (n_stations != n_st)
    throw DataError(hdr_path + ": n_stations=" + std::to_string(n_stations) +
                    " does not match stations.csv (" + std::to_string(n_st) + ")");
  if (n_samples <= 0) throw DataError(hdr_path + ": n_samples must be positive");
  ds.n_samples = static_cast<int>(n_samples);

  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw DataError("missing or unreadable file: " + bin_path);
  bin.seekg(0, std::ios::end);
  const auto actual = static_cast<std::uint64_t>(bin.tellg());
  const std::uint64_t expected = static_cast<std::uint64_t>(n_events) * n_stations *
                                 n_samples * n_comp * sizeof(float);
  if (actual != expected)
    throw DataError(bin_path + ": size " + std::to_string(actual) +
                    " bytes, expected " + std::to_string(expected));
  bin.seekg(0);
  for (auto& ev : ds.events) {
    ev.waveforms.resize(n_st);
    for (int s = 0; s < n_st; ++s) {
      WaveformRecord& w = ev.waveforms[s];
      // row-major (sample, component) on disk; Eigen default is column-major
      std::vector<float> buf(static_cast<std::size_t>(n_samples) * n_comp);
      bin.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)));
      if (!bin) throw DataError(bin_path + ": truncated read");
      w.samples.resize(n_samples, n_comp);
      for (long t = 0; t < n_samples; ++t)
        for (long c = 0; c < n_comp; ++c)
          w.samples(t, c) = buf[static_cast<std::size_t>(t) * n_comp + c];
      w.available = true;  // refined by mask.csv below
    }
  }

  // availability mask
  const std::string mask_path = (fs::path(root) / "mask.csv").string();
  const auto mask = csv::Table::read(mask_path, true);
  const int m_ev = mask.require_column("event_id", mask_path);
  const int m_st = mask.require_column("station_id", mask_path);
  const int m_av = mask.require_column("available", mask_path);
  for (const auto& row : mask.rows) {
    const int e = event_of(row[m_ev], mask_path);
    const int s = station_of(row[m_st], mask_path);
    const long av = csv::to_long(row[m_av], mask_path);
    if (av != 0 && av != 1)
      throw DataError(mask_path + ": available must be 0 or 1");
    ds.events[e].waveforms[s].available = av == 1;
  }
  for (const auto& ev : ds.events) {
    for (int s = 0; s < n_st; ++s) {
      const auto& w = ev.waveforms[s];
      if (!w.available && !w.samples.isZero(0.0f))
        throw DataError("waveform marked unavailable but non-zero: event " +
                        ev.event_id + ", station " + ds.network.station_ids[s]);
    }
  }

  // labels; PGA rows are converted to intensity at ingestion
  const std::string lab_path = (fs::path(root) / "labels.csv").string();
  const auto lab = csv::Table::read(lab_path, true);
  const int l_ev = lab.require_column("event_id", lab_path);
  const int l_st = lab.require_column("station_id", lab_path);
  const int l_v = lab.require_column("value", lab_path);
  const int l_u = lab.require_column("unit", lab_path);
  for (const auto& row : lab.rows) {
    const int e = event_of(row[l_ev], lab_path);
    const int s = station_of(row[l_st], lab_path);
    const double v = csv::to_double(row[l_v], lab_path);
    EventSample& ev = ds.events[e];
    if (row[l_u] == "intensity_ems98") {
      if (v < gmice::kIntensityFloor || v > gmice::kIntensityCeil)
        throw DataError(lab_path + ": intensity " + row[l_v] + " outside [2, 9.5] for event " +
                        ev.event_id + ", station " + ds.network.station_ids[s]);
      ev.labels[s] = v;
      ev.label_source[s] = LabelSource::kIntensityFile;
    } else if (row[l_u] == "pga_cm_s2") {
      if (v < 0.0)
        throw DataError(lab_path + ": negative PGA for event " + ev.event_id);
      ev.labels[s] = gmice::pga_to_intensity(v).value;
      ev.label_source[s] = LabelSource::kConvertedFromPga;
    } else {
      throw DataError(lab_path + ": unknown unit '" + row[l_u] + "'");
    }
    ev.label_valid[s] = true;
  }

  // picks (optional)
  const std::string picks_path = (fs::path(root) / "picks.csv").string();
  if (fs::exists(picks_path)) {
    const auto pk = csv::Table::read(picks_path, true);
    const int p_ev = pk.require_column("event_id", picks_path);
    const int p_st = pk.require_column("station_id", picks_path);
    const int p_t = pk.require_column("p_arrival_s_after_origin", picks_path);
    for (const auto& row : pk.rows) {
      const int e = event_of(row[p_ev], picks_path);
      const int s = station_of(row[p_st], picks_path);
      ds.events[e].p_arrival_s[s] = csv::to_double(row[p_t], picks_path);
    }
  }

  return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& root) {
  namespace fs = std::filesystem;
  fs::create_directories(root);
  const int n_st = ds.network.size();

  {
    csv::Writer w((fs::path(root) / "stations.csv").string());
    w.row({"station_id", "latitude_deg", "longitude_deg"});
    for (int i = 0; i < n_st; ++i)
      w.row({ds.network.station_ids[i], csv::format(ds.network.latitudes_deg[i]),
             csv::format(ds.network.longitudes_deg[i])});
  }
  {
    csv::Writer w((fs::path(root) / "distances.csv").string());
    for (int i = 0; i < n_st; ++i) {
      std::vector<std::string> row;
      for (int j = 0; j < n_st; ++j) row.push_back(csv::format(ds.network.distances_km(i, j)));
      w.row(row);
    }
  }
  {
    csv::Writer w((fs::path(root) / "catalog.csv").string());
    w.row({"event_id", "origin_time_epoch_s", "lat_deg", "lon_deg", "depth_km", "magnitude"});
    for (const auto& ev : ds.events)
      w.row({ev.event_id, csv::format(ev.origin_time_epoch_s),
             csv::format(ev.epicenter_lat_deg), csv::format(ev.epicenter_lon_deg),
             csv::format(ev.depth_km), csv::format(ev.magnitude)});
  }
  {
    csv::Writer w((fs::path(root) / "labels.csv").string());
    w.row({"event_id", "station_id", "value", "unit"});
    for (const auto& ev : ds.events)
      for (int s = 0; s < n_st; ++s)
        if (ev.label_valid[s])
          w.row({ev.event_id, ds.network.station_ids[s], csv::format(ev.labels[s]),
                 "intensity_ems98"});
  }
  {
    csv::Writer w((fs::path(root) / "mask.csv").string());
    w.row({"event_id", "station_id", "available"});
    for (const auto& ev : ds.events)
      for (int s = 0; s < n_st; ++s)
        w.row({ev.event_id, ds.network.station_ids[s],
               ev.waveforms[s].available ? "1" : "0"});
  }
  {
    bool any = false;
    for (const auto& ev : ds.events)
      for (const auto& p : ev.p_arrival_s)
        if (p) any = true;
    if (any) {
      csv::Writer w((fs::path(root) / "picks.csv").string());
      w.row({"event_id", "station_id", "p_arrival_s_after_origin"});
      for (const auto& ev : ds.events)
        for (int s = 0; s < n_st; ++s)
          if (ev.p_arrival_s[s])
            w.row({ev.event_id, ds.network.station_ids[s], csv::format(*ev.p_arrival_s[s])});
    }
  }
  {
    std::ofstream hdr((fs::path(root) / "waveforms.hdr").string());
    hdr << "n_events=" << ds.events.size() << "\n"
        << "n_stations=" << n_st << "\n"
        << "n_samples=" << ds.n_samples << "\n"
        << "n_components=3\n"
        << "order=event,station,sample,component\n"
        << "dtype=f32le\n";
    std::ofstream bin((fs::path(root) / "waveforms.bin").string(), std::ios::binary);
    std::vector<float> buf;
    for (const auto& ev : ds.events) {
      for (int s = 0; s < n_st; ++s) {
        const auto& w = ev.waveforms[s];
        if (w.samples.rows() != ds.n_samples || w.samples.cols() != kComponents)
          throw DataError("inconsistent waveform shape for event " + ev.event_id);
        buf.resize(static_cast<std::size_t>(ds.n_samples) * kComponents);
        for (int t = 0; t < ds.n_samples; ++t)
          for (int c = 0; c < kComponents; ++c)
            buf[static_cast<std::size_t>(t) * kComponents + c] =
                w.available ? w.samples(t, c) : 0.0f;
        bin.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
      }
    }
  }
}

}  // namespace scgnn
