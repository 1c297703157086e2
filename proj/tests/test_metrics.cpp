#include "scgnn/metrics.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace scgnn;

namespace {

ResidualSet make_set(const std::vector<double>& pred,
                     const std::vector<double>& obs) {
  ResidualSet rs;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ResidualPair p;
    p.event_id = "e";
    p.station_id = "s" + std::to_string(i);
    p.predicted = pred[i];
    p.observed = obs[i];
    rs.push_back(p);
  }
  return rs;
}

}  // namespace

TEST(Metrics, PerfectPrediction) {
  const auto m = metrics(make_set({2, 3, 4, 5}, {2, 3, 4, 5}));
  EXPECT_DOUBLE_EQ(m.mse, 0.0);
  EXPECT_DOUBLE_EQ(m.sd, 0.0);
  EXPECT_NEAR(m.cc_percent, 100.0, 1e-9);
  EXPECT_NEAR(m.r2_percent, 100.0, 1e-9);
  EXPECT_DOUBLE_EQ(m.normalized_mse, 0.0);
}

TEST(Metrics, ConstantShift) {
  const double c = 0.7;
  const auto m = metrics(make_set({2 + c, 3 + c, 4 + c, 5 + c}, {2, 3, 4, 5}));
  EXPECT_NEAR(m.mse, c * c, 1e-12);
  EXPECT_NEAR(m.sd, 0.0, 1e-12);
  EXPECT_NEAR(m.cc_percent, 100.0, 1e-9);
}

TEST(Metrics, FourPointHandComputation) {
  // spreadsheet-style oracle, worked by hand:
  // pred = [3.0, 4.0, 2.5, 6.0], obs = [2.5, 4.5, 3.0, 5.0]
  // err = [0.5, -0.5, -0.5, 1.0]; mse = (0.25+0.25+0.25+1)/4 = 0.4375
  // mean err = 0.125; var = ((0.375)^2+(0.625)^2+(0.625)^2+(0.875)^2)/4
  //          = (0.140625+0.390625+0.390625+0.765625)/4 = 0.421875
  // sd = 0.6495190528383290
  // mean pred = 3.875, mean obs = 3.75
  // cov-sum = (-0.875)(-1.25)+(0.125)(0.75)+(-1.375)(-0.75)+(2.125)(1.25)
  //         = 1.09375+0.09375+1.03125+2.65625 = 4.875
  // vp = 0.765625+0.015625+1.890625+4.515625 = 7.1875
  // vo = 1.5625+0.5625+0.5625+1.5625 = 4.25
  // r^2 = 4.875^2 / (7.1875*4.25) = 0.7780051150895143
  // r = 0.8820459824122064
  const auto m = metrics(make_set({3.0, 4.0, 2.5, 6.0}, {2.5, 4.5, 3.0, 5.0}));
  EXPECT_NEAR(m.mse, 0.4375, 1e-9);
  EXPECT_NEAR(m.sd, 0.6495190528383290, 1e-9);
  EXPECT_NEAR(m.cc_percent, 88.20459824122064, 1e-9);
  EXPECT_NEAR(m.r2_percent, 77.80051150895143, 1e-6);
  EXPECT_NEAR(m.normalized_mse, 0.4375 / 3.75, 1e-12);
}

TEST(Metrics, RSquaredIsSquaredCorrelation) {
  Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(40));
    std::vector<double> p(n), o(n);
    for (int i = 0; i < n; ++i) {
      o[i] = rng.uniform(2, 9.5);
      p[i] = o[i] + rng.normal();
    }
    const auto m = metrics(make_set(p, o));
    EXPECT_NEAR(m.r2_percent, m.cc_percent * m.cc_percent / 100.0, 1e-9);
    EXPECT_NEAR(m.normalized_mse * (std::accumulate(o.begin(), o.end(), 0.0) / n),
                m.mse, 1e-9);
  }
}

TEST(Metrics, PermutationInvariant) {
  Rng rng(72);
  std::vector<double> p, o;
  for (int i = 0; i < 25; ++i) {
    o.push_back(rng.uniform(2, 9.5));
    p.push_back(o.back() + rng.normal());
  }
  auto rs = make_set(p, o);
  const auto m1 = metrics(rs);
  std::vector<int> perm(rs.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  ResidualSet shuffled;
  for (int i : perm) shuffled.push_back(rs[i]);
  const auto m2 = metrics(shuffled);
  EXPECT_NEAR(m1.mse, m2.mse, 1e-12);
  EXPECT_NEAR(m1.sd, m2.sd, 1e-12);
  EXPECT_NEAR(m1.cc_percent, m2.cc_percent, 1e-10);
}

TEST(Metrics, DegenerateVarianceFlagged) {
  const auto m = metrics(make_set({4, 4, 4}, {2, 3, 5}));
  EXPECT_TRUE(m.cc_degenerate);
  EXPECT_DOUBLE_EQ(m.cc_percent, 0.0);
}

TEST(BlandAltman, PerfectAgreement) {
  const auto b = bland_altman(make_set({3, 4, 5}, {3, 4, 5}));
  EXPECT_DOUBLE_EQ(b.mean_difference, 0.0);
  EXPECT_DOUBLE_EQ(b.loa_low, 0.0);
  EXPECT_DOUBLE_EQ(b.loa_high, 0.0);
}

TEST(BlandAltman, ConstantDifference) {
  const auto b = bland_altman(make_set({3.5, 4.5, 5.5}, {3, 4, 5}));
  EXPECT_NEAR(b.mean_difference, 0.5, 1e-12);
  EXPECT_NEAR(b.loa_low, 0.5, 1e-12);
  EXPECT_NEAR(b.loa_high, 0.5, 1e-12);
}

TEST(BlandAltman, HandComputation) {
  // d = pred - obs = [0.5, -0.5, -0.5, 1.0]; mean = 0.125
  // sd = 0.6495190528383290 (population); loa = 0.125 -+ 1.96*sd
  const auto b = bland_altman(make_set({3.0, 4.0, 2.5, 6.0}, {2.5, 4.5, 3.0, 5.0}));
  EXPECT_NEAR(b.mean_difference, 0.125, 1e-12);
  EXPECT_NEAR(b.loa_low, 0.125 - 1.96 * 0.6495190528383290, 1e-9);
  EXPECT_NEAR(b.loa_high, 0.125 + 1.96 * 0.6495190528383290, 1e-9);
}

TEST(BlandAltman, LoaWidthProperty) {
  Rng rng(73);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(50));
    std::vector<double> p(n), o(n);
    for (int i = 0; i < n; ++i) {
      o[i] = rng.uniform(2, 9.5);
      p[i] = o[i] + rng.normal();
    }
    const auto b = bland_altman(make_set(p, o));
    EXPECT_NEAR(b.loa_high - b.loa_low, 2 * 1.96 * b.sd, 1e-10);
  }
}

TEST(ConditionalGroups, MagnitudeBinning) {
  ResidualSet rs = make_set({3, 4, 5, 6}, {3, 4, 5, 6});
  rs[0].magnitude = 3.2;
  rs[1].magnitude = 3.5;
  rs[2].magnitude = 4.49;
  rs[3].magnitude = 8.0;
  const auto groups = conditional_groups(rs, GroupAxis::kMagnitude);
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[0].pairs.size(), 1u);  // 3.2
  EXPECT_EQ(groups[1].pairs.size(), 2u);  // 3.5, 4.49
  EXPECT_EQ(groups[2].pairs.size(), 1u);  // 8.0
}

TEST(ConditionalGroups, DepthBinningAndEmptyBins) {
  ResidualSet rs = make_set({3, 4}, {3, 4});
  rs[0].depth_km = 7.9;
  rs[1].depth_km = 9.99;
  const auto groups = conditional_groups(rs, GroupAxis::kDepth);
  EXPECT_EQ(groups[0].pairs.size(), 1u);
  EXPECT_EQ(groups[1].pairs.size(), 1u);
  EXPECT_EQ(groups[2].pairs.size(), 0u);
  EXPECT_TRUE(groups[2].degenerate);
}

TEST(ConditionalGroups, DiagonalDataGivesUnitLines) {
  Rng rng(74);
  ResidualSet rs;
  for (int i = 0; i < 30; ++i) {
    ResidualPair p;
    p.observed = rng.uniform(2, 9.5);
    p.predicted = p.observed;
    p.magnitude = rng.uniform(3.0, 6.0);
    p.depth_km = rng.uniform(1.0, 20.0);
    rs.push_back(p);
  }
  for (auto axis : {GroupAxis::kMagnitude, GroupAxis::kDepth}) {
    for (const auto& g : conditional_groups(rs, axis)) {
      if (g.pairs.size() < 2) continue;
      EXPECT_NEAR(g.slope, 1.0, 1e-9);
      EXPECT_NEAR(g.intercept, 0.0, 1e-9);
    }
  }
}

TEST(ConditionalGroups, LeastSquaresOracle) {
  // skewed hand set: obs = [2, 4, 6], pred = [3, 4, 8]
  // slope = cov/var = ((-2)(-2)+(0)(0)+(2)(3)) / ((-2)^2+0+2^2) = 10/8 = 1.25
  // intercept = 5 - 1.25*4 = 0
  ResidualSet rs = make_set({3, 4, 8}, {2, 4, 6});
  for (auto& p : rs) p.magnitude = 3.2;
  const auto groups = conditional_groups(rs, GroupAxis::kMagnitude);
  EXPECT_NEAR(groups[0].slope, 1.25, 1e-12);
  EXPECT_NEAR(groups[0].intercept, 0.0, 1e-12);
}
