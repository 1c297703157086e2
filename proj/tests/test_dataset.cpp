#include "scgnn/dataset.hpp"
#include "scgnn/digest.hpp"
#include "scgnn/synth.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace scgnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("scgnn_ds_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string str() const { return path.string(); }
};

SynthConfig small_synth() {
  SynthConfig cfg;
  cfg.n_stations = 5;
  cfg.n_events = 3;
  cfg.duration_s = 30.0;
  cfg.seed = 77;
  return cfg;
}

void rewrite_line(const fs::path& file, const std::string& from,
                  const std::string& to) {
  std::ifstream in(file);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  in.close();
  const auto pos = content.find(from);
  ASSERT_NE(pos, std::string::npos);
  content.replace(pos, from.size(), to);
  std::ofstream out(file);
  out << content;
}

}  // namespace

TEST(Dataset, SynthRoundTrip) {
  TempDir dir;
  const auto cfg = small_synth();
  const auto result = synth_generate(cfg);
  synth_write(cfg, result, dir.str());

  const Dataset ds = load_dataset(dir.str());
  EXPECT_EQ(ds.network.size(), 5);
  EXPECT_EQ(ds.events.size(), 3u);
  EXPECT_EQ(ds.n_samples, 3000);

  // labels shipped as PGA rows convert to the same intensity values
  for (std::size_t e = 0; e < ds.events.size(); ++e) {
    for (int s = 0; s < 5; ++s) {
      EXPECT_TRUE(ds.events[e].label_valid[s]);
      EXPECT_EQ(ds.events[e].label_source[s], LabelSource::kConvertedFromPga);
      EXPECT_NEAR(ds.events[e].labels[s], result.dataset.events[e].labels[s], 1e-12);
    }
  }

  // waveform arrays round-trip bit-exactly
  TempDir dir2;
  save_dataset(ds, dir2.str());
  EXPECT_EQ(digest_file((dir.path / "waveforms.bin").string()),
            digest_file((dir2.path / "waveforms.bin").string()));
  const Dataset ds2 = load_dataset(dir2.str());
  for (std::size_t e = 0; e < ds.events.size(); ++e)
    for (int s = 0; s < 5; ++s)
      EXPECT_TRUE(ds.events[e].waveforms[s].samples ==
                  ds2.events[e].waveforms[s].samples);
}

TEST(Dataset, MissingWaveformIsZeroImputed) {
  TempDir dir;
  auto cfg = small_synth();
  cfg.missing_fraction = 0.4;
  cfg.seed = 5;
  const auto result = synth_generate(cfg);
  synth_write(cfg, result, dir.str());
  const Dataset ds = load_dataset(dir.str());
  int missing = 0;
  for (const auto& ev : ds.events)
    for (const auto& w : ev.waveforms)
      if (!w.available) {
        ++missing;
        EXPECT_TRUE(w.samples.isZero(0.0f));
      }
  EXPECT_GT(missing, 0);
}

TEST(Dataset, MissingFileNamesTheFile) {
  TempDir dir;
  const auto cfg = small_synth();
  synth_write(cfg, synth_generate(cfg), dir.str());
  fs::remove(dir.path / "labels.csv");
  try {
    load_dataset(dir.str());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("labels.csv"), std::string::npos);
  }
}

TEST(Dataset, AsymmetricDistancesFatal) {
  TempDir dir;
  const auto cfg = small_synth();
  const auto result = synth_generate(cfg);
  synth_write(cfg, result, dir.str());
  // corrupt one off-diagonal entry
  const auto t = csv::Table::read((dir.path / "distances.csv").string(), false);
  std::ofstream out(dir.path / "distances.csv");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.rows[i].size(); ++j) {
      std::string v = t.rows[i][j];
      if (i == 2 && j == 3) v = csv::format(csv::to_double(v, "d") + 1.0);
      out << (j ? "," : "") << v;
    }
    out << "\n";
  }
  out.close();
  try {
    load_dataset(dir.str());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("asymmetric"), std::string::npos);
  }
}

TEST(Dataset, HeaderMismatchFatal) {
  TempDir dir;
  const auto cfg = small_synth();
  synth_write(cfg, synth_generate(cfg), dir.str());
  rewrite_line(dir.path / "waveforms.hdr", "n_samples=3000", "n_samples=2999");
  EXPECT_THROW(load_dataset(dir.str()), DataError);
}

TEST(Dataset, WrongDtypeFatal) {
  TempDir dir;
  const auto cfg = small_synth();
  synth_write(cfg, synth_generate(cfg), dir.str());
  rewrite_line(dir.path / "waveforms.hdr", "dtype=f32le", "dtype=f64le");
  EXPECT_THROW(load_dataset(dir.str()), DataError);
}

TEST(Dataset, UnavailableButNonZeroFatal) {
  TempDir dir;
  const auto cfg = small_synth();
  synth_write(cfg, synth_generate(cfg), dir.str());
  // claim the first record is unavailable while its samples are non-zero
  const auto t = csv::Table::read((dir.path / "mask.csv").string(), true);
  std::ofstream out(dir.path / "mask.csv");
  out << "event_id,station_id,available\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    out << t.rows[i][0] << "," << t.rows[i][1] << "," << (i == 0 ? "0" : t.rows[i][2])
        << "\n";
  out.close();
  EXPECT_THROW(load_dataset(dir.str()), DataError);
}

TEST(Dataset, ImputeMissingIdempotent) {
  auto cfg = small_synth();
  cfg.missing_fraction = 0.3;
  cfg.seed = 9;
  auto result = synth_generate(cfg);
  auto& ev = result.dataset.events[0];
  // fill unavailable records with garbage, impute, compare
  std::vector<WaveformRecord> w = ev.waveforms;
  bool any_missing = false;
  for (auto& r : w)
    if (!r.available) {
      r.samples.setConstant(3.5f);
      any_missing = true;
    }
  std::vector<WaveformRecord> before = w;
  impute_missing(w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w[i].available) {
      EXPECT_TRUE(w[i].samples.isZero(0.0f));
    } else {
      EXPECT_TRUE(w[i].samples == before[i].samples);  // bit-identical
    }
  }
  std::vector<WaveformRecord> twice = w;
  impute_missing(twice);
  for (std::size_t i = 0; i < w.size(); ++i)
    EXPECT_TRUE(twice[i].samples == w[i].samples);
  EXPECT_TRUE(any_missing);
}

TEST(Dataset, FoldSplitsPartitionCatalog) {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("EV" + std::to_string(i));
  const auto splits = split_folds(ids, 5, 123);
  ASSERT_EQ(splits.size(), 5u);
  std::set<std::string> seen;
  for (const auto& s : splits) {
    EXPECT_EQ(s.test.size(), 2u);
    for (const auto& id : s.test) {
      EXPECT_TRUE(seen.insert(id).second) << "event in two test folds";
    }
    std::set<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), ids.size());
  }
  EXPECT_EQ(seen.size(), ids.size());
}

TEST(Dataset, FoldSplitsDeterministic) {
  std::vector<std::string> ids;
  for (int i = 0; i < 23; ++i) ids.push_back("E" + std::to_string(i));
  const auto a = split_folds(ids, 4, 999);
  const auto b = split_folds(ids, 4, 999);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].test, b[i].test);
    EXPECT_EQ(a[i].train, b[i].train);
    EXPECT_EQ(a[i].validation, b[i].validation);
  }
  const auto c = split_folds(ids, 4, 1000);
  bool any_different = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].test != c[i].test) any_different = true;
  EXPECT_TRUE(any_different);
}

TEST(Dataset, FoldSizesForLargeCatalog) {
  std::vector<std::string> ids;
  for (int i = 0; i < 915; ++i) ids.push_back("E" + std::to_string(i));
  const auto splits = split_folds(ids, 10, 7);
  for (const auto& s : splits) {
    EXPECT_TRUE(s.test.size() == 91 || s.test.size() == 92) << s.test.size();
  }
}

TEST(Dataset, FoldErrors) {
  std::vector<std::string> ids = {"a", "b", "c"};
  EXPECT_THROW(split_folds(ids, 4, 1), UsageError);
  EXPECT_THROW(split_folds(ids, 1, 1), UsageError);
}

TEST(Dataset, RandomPartitionProperty) {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + static_cast<int>(rng.uniform_int(60));
    const int k = 2 + static_cast<int>(rng.uniform_int(std::min(n - 1, 8)));
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("E" + std::to_string(i));
    const auto splits = split_folds(ids, k, rng.raw());
    std::set<std::string> seen;
    for (const auto& s : splits)
      for (const auto& id : s.test) EXPECT_TRUE(seen.insert(id).second);
    EXPECT_EQ(static_cast<int>(seen.size()), n);
  }
}

TEST(Dataset, HoldoutSplit) {
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back("E" + std::to_string(i));
  const auto s = split_holdout(ids, 0.7, 0.15, 5);
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.validation.size(), 15u);
  EXPECT_EQ(s.test.size(), 15u);
  std::set<std::string> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 100u);
}
