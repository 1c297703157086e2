#include "scgnn/losses.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace scgnn;

namespace {

ContrastiveBatch pair_layout(int m) {
  ContrastiveBatch b;
  for (int i = 0; i < m / 2; ++i) {
    b.samples.push_back({"e" + std::to_string(i), i, false, 0.0});
    b.samples.push_back({"e" + std::to_string(i), i, true, 5.0});
  }
  return b;
}

// Brute-force double-loop evaluation: normalize, then for every anchor sum
// the softmax denominator over all other samples explicitly.
double oracle_contrastive(const Matrix& raw, double tau) {
  const int m = static_cast<int>(raw.rows());
  Matrix z = raw;
  for (int i = 0; i < m; ++i) z.row(i) /= std::max(z.row(i).norm(), 1e-12);
  double total = 0.0;
  for (int anchor = 0; anchor < m; ++anchor) {
    const int positive = anchor % 2 == 0 ? anchor + 1 : anchor - 1;
    double denom = 0.0;
    for (int other = 0; other < m; ++other) {
      if (other == anchor) continue;
      denom += std::exp(z.row(anchor).dot(z.row(other)) / tau);
    }
    total += -std::log(std::exp(z.row(anchor).dot(z.row(positive)) / tau) / denom);
  }
  return total;
}

Matrix random_projections(int m, int dim, Rng& rng) {
  Matrix p(m, dim);
  for (long i = 0; i < p.size(); ++i) p.data()[i] = rng.normal();
  return p;
}

}  // namespace

TEST(ContrastiveLoss, IdenticalPairIsExactlyZero) {
  Matrix z(2, 3);
  z << 0.3, -0.2, 0.9, 0.3, -0.2, 0.9;
  const auto r = contrastive_loss(z, pair_layout(2), 0.1);
  EXPECT_EQ(r.value, 0.0);
}

TEST(ContrastiveLoss, MatchesBruteForceOracle) {
  Rng rng(21);
  for (int m : {2, 4, 8, 16}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix p = random_projections(m, 5, rng);
      const double tau = trial % 2 == 0 ? 0.1 : rng.uniform(0.05, 1.0);
      const auto r = contrastive_loss(p, pair_layout(m), tau, false);
      EXPECT_NEAR(r.value, oracle_contrastive(p, tau), 1e-6);
    }
  }
}

TEST(ContrastiveLoss, HandChosenTwoDimBatch) {
  Matrix p(4, 2);
  p << 1.0, 0.0,
       0.8, 0.6,
       0.0, 1.0,
       -0.6, 0.8;
  const auto r = contrastive_loss(p, pair_layout(4), 0.5, false);
  EXPECT_NEAR(r.value, oracle_contrastive(p, 0.5), 1e-9);
}

TEST(ContrastiveLoss, LargeTemperatureApproachesUniformLimit) {
  Rng rng(22);
  const int m = 8;
  const Matrix p = random_projections(m, 4, rng);
  const auto r = contrastive_loss(p, pair_layout(m), 1e7, false);
  EXPECT_NEAR(r.value, m * std::log(m - 1.0), 1e-4);
}

TEST(ContrastiveLoss, NonNegative) {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 * (1 + static_cast<int>(rng.uniform_int(6)));
    const Matrix p = random_projections(m, 6, rng);
    const auto r = contrastive_loss(p, pair_layout(m), 0.1, false);
    EXPECT_GE(r.value, -1e-12);
  }
}

TEST(ContrastiveLoss, InvariantToCommonRotation) {
  Rng rng(24);
  const int m = 6, dim = 4;
  const Matrix p = random_projections(m, dim, rng);
  // random orthogonal via QR of a gaussian matrix
  Matrix g = random_projections(dim, dim, rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  const auto a = contrastive_loss(p, pair_layout(m), 0.2, false);
  const auto b = contrastive_loss((p * q).eval(), pair_layout(m), 0.2, false);
  EXPECT_NEAR(a.value, b.value, 1e-9);
}

TEST(ContrastiveLoss, RejectsOddBatch) {
  Matrix p(3, 2);
  p.setRandom();
  ContrastiveBatch layout = pair_layout(4);
  layout.samples.pop_back();
  EXPECT_THROW(contrastive_loss(p, layout, 0.1), UsageError);
}

TEST(ContrastiveLoss, GradientMatchesFiniteDifferences) {
  Rng rng(25);
  int checked = 0;
  for (int trial = 0; trial < 5 && checked < 100; ++trial) {
    const int m = 4 + 2 * static_cast<int>(rng.uniform_int(3));
    Matrix p = random_projections(m, 5, rng);
    const double tau = rng.uniform(0.1, 0.5);
    const auto layout = pair_layout(m);
    const auto r = contrastive_loss(p, layout, tau);
    for (int k = 0; k < 25 && checked < 100; ++k, ++checked) {
      const long idx = static_cast<long>(rng.uniform_int(p.size()));
      const double numeric = scgnn::tst::central_diff(
          [&]() { return contrastive_loss(p, layout, tau, false).value; },
          p.data() + idx, 1e-6);
      EXPECT_LT(scgnn::tst::grad_rel_error(r.grad.data()[idx], numeric), 1e-4);
    }
  }
  EXPECT_EQ(checked, 100);
}

TEST(RegressionLoss, ZeroWhenExact) {
  Vector t(4);
  t << 3.0, 4.0, 5.0, 6.5;
  const auto r = regression_loss(t, t, LossConfig{});
  EXPECT_DOUBLE_EQ(r.value, 0.0);
  EXPECT_NEAR(r.pearson_r, 1.0, 1e-12);
}

TEST(RegressionLoss, HandWorkedConstantShift) {
  // pred = target + 1 on a non-constant target: r = 1, huber(1) = 0.5,
  // mse 1, mae 1, no underestimation so the asymmetric term equals 0.5.
  // total = 1.0*0.5 + 0.0096*1 + 0.002*1 + 0.0032*0.5 = 0.5132
  Vector t(4);
  t << 2.0, 3.0, 4.5, 7.0;
  Vector p = t.array() + 1.0;
  const auto r = regression_loss(p, t, LossConfig{});
  EXPECT_NEAR(r.value, 0.5132, 1e-12);
}

TEST(RegressionLoss, UnderestimationPenalizedHarder) {
  Vector t(4);
  t << 2.0, 3.0, 4.5, 7.0;
  Vector over = t.array() + 1.0;
  Vector under = t.array() - 1.0;
  const auto ro = regression_loss(over, t, LossConfig{});
  const auto ru = regression_loss(under, t, LossConfig{});
  // only the asymmetric huber term changes sides: 0.0032*0.5 vs 0.0032*1.0
  EXPECT_NEAR(ru.value - ro.value, 0.0032 * 0.5, 1e-12);
}

TEST(RegressionLoss, DegenerateTargetFlagged) {
  Vector t = Vector::Constant(5, 4.0);
  Vector p(5);
  p << 1, 2, 3, 4, 5;
  const auto r = regression_loss(p, t, LossConfig{});
  EXPECT_TRUE(r.correlation_degenerate);
  EXPECT_DOUBLE_EQ(r.pearson_r, 0.0);
}

TEST(RegressionLoss, ElementwiseOracle) {
  // independent elementwise accumulation with explicit formulas
  Rng rng(26);
  LossConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(20));
    Vector p(n), t(n);
    for (int i = 0; i < n; ++i) {
      p(i) = rng.uniform(0.0, 10.0);
      t(i) = rng.uniform(2.0, 9.5);
    }
    double huber_sum = 0, sq = 0, ab = 0, asym = 0;
    for (int i = 0; i < n; ++i) {
      const double e = p(i) - t(i);
      const double h =
          std::abs(e) <= cfg.huber_delta
              ? 0.5 * e * e
              : cfg.huber_delta * (std::abs(e) - 0.5 * cfg.huber_delta);
      huber_sum += h;
      sq += e * e;
      ab += std::abs(e);
      asym += (e < 0 ? cfg.underestimate_factor : 1.0) * h;
    }
    double mp = p.mean(), mt = t.mean(), c = 0, vp = 0, vt = 0;
    for (int i = 0; i < n; ++i) {
      c += (p(i) - mp) * (t(i) - mt);
      vp += (p(i) - mp) * (p(i) - mp);
      vt += (t(i) - mt) * (t(i) - mt);
    }
    const double rho = c / std::sqrt(vp * vt);
    const double expected = cfg.w_correlation * (1 - rho * rho) +
                            (cfg.w_huber * huber_sum + cfg.w_mse * sq +
                             cfg.w_mae * ab + cfg.w_asym_huber * asym) / n;
    const auto r = regression_loss(p, t, cfg, false);
    EXPECT_NEAR(r.value, expected, 1e-12);
  }
}

TEST(RegressionLoss, GradientMatchesFiniteDifferences) {
  Rng rng(27);
  LossConfig cfg;
  int checked = 0;
  for (int trial = 0; trial < 10 && checked < 100; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform_int(12));
    Vector p(n), t(n);
    for (int i = 0; i < n; ++i) {
      p(i) = rng.uniform(1.0, 9.0);
      t(i) = rng.uniform(2.0, 9.5);
    }
    const auto r = regression_loss(p, t, cfg);
    for (int k = 0; k < 15 && checked < 100; ++k, ++checked) {
      const long idx = static_cast<long>(rng.uniform_int(n));
      const double numeric = scgnn::tst::central_diff(
          [&]() { return regression_loss(p, t, cfg, false).value; },
          p.data() + idx, 1e-6);
      EXPECT_LT(scgnn::tst::grad_rel_error(r.grad(idx), numeric), 1e-4);
    }
  }
  EXPECT_EQ(checked, 100);
}

TEST(HybridLoss, Sum) {
  EXPECT_DOUBLE_EQ(hybrid_loss(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(hybrid_loss(1.5, 0.25), 1.75);
}
