#include "scgnn/eew.hpp"
#include "scgnn/gmice.hpp"
#include "scgnn/synth.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace scgnn;

TEST(Synth, DeterministicForFixedSeed) {
  SynthConfig cfg;
  cfg.n_stations = 6;
  cfg.n_events = 4;
  const auto a = synth_generate(cfg);
  const auto b = synth_generate(cfg);
  for (std::size_t e = 0; e < a.dataset.events.size(); ++e) {
    EXPECT_EQ(a.dataset.events[e].magnitude, b.dataset.events[e].magnitude);
    for (int s = 0; s < cfg.n_stations; ++s)
      EXPECT_TRUE(a.dataset.events[e].waveforms[s].samples ==
                  b.dataset.events[e].waveforms[s].samples);
  }
  SynthConfig other = cfg;
  other.seed = cfg.seed + 1;
  const auto c = synth_generate(other);
  EXPECT_FALSE(a.dataset.events[0].waveforms[0].samples ==
               c.dataset.events[0].waveforms[0].samples);
}

TEST(Synth, AttenuationLawByConstruction) {
  SynthConfig cfg;
  // one magnitude step at fixed distance multiplies PGA by 10^a
  const double r = 60.0;
  const double pga4 = std::pow(10.0, cfg.atten_a * 4.0 -
                                         cfg.atten_b * std::log10(r + cfg.atten_c));
  const double pga5 = std::pow(10.0, cfg.atten_a * 5.0 -
                                         cfg.atten_b * std::log10(r + cfg.atten_c));
  EXPECT_NEAR(pga5 / pga4, std::pow(10.0, cfg.atten_a), 1e-9);
}

TEST(Synth, TravelTimesFromVelocities) {
  // hypocentral distance 60 km with the default velocity model
  SynthConfig cfg;
  EXPECT_NEAR(60.0 / cfg.vp_km_s, 10.0, 1e-12);
  EXPECT_NEAR(60.0 / cfg.vs_km_s, 17.142857142857142, 1e-12);

  SynthConfig small;
  small.n_stations = 8;
  small.n_events = 3;
  small.seed = 21;
  const auto world = synth_generate(small);
  for (const auto& t : world.truth) {
    EXPECT_NEAR(t.p_arrival_s, t.hypocentral_km / small.vp_km_s, 1e-9);
    EXPECT_NEAR(t.s_arrival_s, t.hypocentral_km / small.vs_km_s, 1e-9);
  }
}

TEST(Synth, LabelsAreExactConversionsOfTruePga) {
  SynthConfig cfg;
  cfg.n_stations = 7;
  cfg.n_events = 5;
  cfg.seed = 22;
  const auto world = synth_generate(cfg);
  std::size_t i = 0;
  for (const auto& ev : world.dataset.events)
    for (int s = 0; s < cfg.n_stations; ++s, ++i) {
      EXPECT_EQ(ev.labels[s], gmice::pga_to_intensity(world.truth[i].pga_cm_s2).value);
    }
}

TEST(Synth, PeakShakingAtSArrival) {
  SynthConfig cfg;
  cfg.n_stations = 10;
  cfg.n_events = 5;
  cfg.seed = 23;
  const auto world = synth_generate(cfg);
  std::size_t i = 0;
  for (const auto& ev : world.dataset.events)
    for (int s = 0; s < cfg.n_stations; ++s, ++i) {
      const auto peak = max_shaking_time(ev.waveforms[s].samples);
      ASSERT_TRUE(peak.has_value());
      EXPECT_NEAR(*peak, world.truth[i].s_arrival_s, 0.1);
    }
}

TEST(Synth, IntensityDecreasesWithDistanceAtFixedMagnitude) {
  SynthConfig cfg;
  // direct check of the law away from the clamp floor
  for (double m : {4.0, 5.0, 6.0}) {
    double prev = 1e9;
    for (double r : {10.0, 30.0, 60.0, 90.0}) {
      const double pga =
          std::pow(10.0, cfg.atten_a * m - cfg.atten_b * std::log10(r + cfg.atten_c));
      const double intensity = gmice::pga_to_intensity(pga).value;
      EXPECT_LE(intensity, prev + 1e-12);
      prev = intensity;
    }
  }
}

TEST(Synth, MissingFractionRespected) {
  SynthConfig cfg;
  cfg.n_stations = 15;
  cfg.n_events = 30;
  cfg.missing_fraction = 0.25;
  cfg.seed = 24;
  const auto world = synth_generate(cfg);
  long missing = 0, total = 0;
  for (const auto& ev : world.dataset.events)
    for (const auto& w : ev.waveforms) {
      ++total;
      if (!w.available) ++missing;
    }
  const double frac = static_cast<double>(missing) / total;
  EXPECT_NEAR(frac, 0.25, 0.08);
  // missing records carry no pick and no samples
  for (const auto& ev : world.dataset.events)
    for (int s = 0; s < cfg.n_stations; ++s)
      if (!ev.waveforms[s].available) {
        EXPECT_TRUE(ev.waveforms[s].samples.isZero(0.0f));
        EXPECT_FALSE(ev.p_arrival_s[s].has_value());
      }
}

TEST(Synth, RegionTooSmallFails) {
  SynthConfig cfg;
  cfg.n_stations = 50;
  cfg.lat_lo = 34.0;
  cfg.lat_hi = 34.0001;
  cfg.lon_lo = -117.0001;
  cfg.lon_hi = -117.0;
  EXPECT_THROW(synth_generate(cfg), DataError);
}

TEST(Synth, OversizedRegionRejectedForWindow) {
  SynthConfig cfg;
  cfg.lat_lo = 30.0;
  cfg.lat_hi = 36.0;  // hundreds of km: S arrivals would overflow 30 s
  cfg.n_stations = 5;
  cfg.n_events = 3;
  EXPECT_THROW(synth_generate(cfg), DataError);
}
