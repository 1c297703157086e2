#include "scgnn/gmice.hpp"
#include "scgnn/rng.hpp"

#include <gtest/gtest.h>

using namespace scgnn;

TEST(Gmice, UnitPgaGivesOffset) {
  const auto r = gmice::pga_to_intensity(1.0);
  EXPECT_DOUBLE_EQ(r.value, 2.03);
  EXPECT_FALSE(r.clamped);
  EXPECT_FALSE(r.degenerate);
}

TEST(Gmice, SmallPgaClampsToFloor) {
  const auto r = gmice::pga_to_intensity(0.5);
  // raw = 2.03 + 2.28 * log10(0.5) = 1.3436...
  EXPECT_NEAR(r.raw, 2.03 + 2.28 * std::log10(0.5), 1e-12);
  EXPECT_NEAR(r.raw, 1.343651, 1e-6);
  EXPECT_DOUBLE_EQ(r.value, 2.0);
  EXPECT_TRUE(r.clamped);
}

TEST(Gmice, TenPga) {
  const auto r = gmice::pga_to_intensity(10.0);
  EXPECT_NEAR(r.value, 4.31, 1e-12);
}

TEST(Gmice, DegenerateInput) {
  const auto r = gmice::pga_to_intensity(0.0);
  EXPECT_DOUBLE_EQ(r.value, 2.0);
  EXPECT_TRUE(r.degenerate);
  const auto rn = gmice::pga_to_intensity(-3.0);
  EXPECT_DOUBLE_EQ(rn.value, 2.0);
  EXPECT_TRUE(rn.degenerate);
}

TEST(Gmice, UpperClamp) {
  const auto r = gmice::pga_to_intensity(1e9);
  EXPECT_DOUBLE_EQ(r.value, 9.5);
  EXPECT_TRUE(r.clamped);
}

TEST(Gmice, InverseKnownPoints) {
  EXPECT_NEAR(gmice::intensity_to_pga(2.03), 1.0, 1e-12);
  EXPECT_NEAR(gmice::intensity_to_pga(4.31), 10.0, 1e-8);
  EXPECT_THROW(gmice::intensity_to_pga(1.9), DataError);
  EXPECT_THROW(gmice::intensity_to_pga(9.6), DataError);
}

TEST(Gmice, RoundTripOnUnclampedRange) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double intensity = rng.uniform(2.03, 9.5);
    const double pga = gmice::intensity_to_pga(intensity);
    const auto back = gmice::pga_to_intensity(pga);
    EXPECT_FALSE(back.degenerate);
    EXPECT_NEAR(back.value, intensity, 1e-9 * intensity);
  }
}

TEST(Gmice, Monotone) {
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(0.0, 1000.0);
    const double b = a + rng.uniform(0.0, 100.0);
    EXPECT_LE(gmice::pga_to_intensity(a).value, gmice::pga_to_intensity(b).value);
  }
}

TEST(Gmice, ClampFlagMatchesRange) {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const double pga = std::pow(10.0, rng.uniform(-4.0, 5.0));
    const auto r = gmice::pga_to_intensity(pga);
    EXPECT_GE(r.value, 2.0);
    EXPECT_LE(r.value, 9.5);
    EXPECT_EQ(r.clamped, r.raw < 2.0 || r.raw > 9.5);
  }
}
