#pragma once

#include "scgnn/common.hpp"
#include "scgnn/digest.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace scgnn {

enum class PercentileDomain { kOffDiagonal, kAll };

/// Station proximity weights in [0,1]: unit diagonal, symmetric, sparsified
/// at the given quantile of the pre-threshold weights.
struct AdjacencyMatrix {
  Matrix weights;
  double threshold_quantile = 0.75;
  PercentileDomain domain = PercentileDomain::kOffDiagonal;
  std::uint64_t source_digest = 0;

  int size() const { return static_cast<int>(weights.rows()); }
};

/// Quantile with linear interpolation between order statistics
/// (position (n-1)*q on the sorted values).
inline double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("quantile of empty set");
  if (q < 0.0 || q > 1.0) throw UsageError("quantile must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

constexpr double kDiagonalSentinelKm = 1e9;

/// Turns inter-station distances into graph weights:
///   1. verify symmetry / positivity
///   2. diagonal <- large sentinel
///   3. w_ij = d_min / d_ij  (closest pair maps to 1)
///   4. diagonal <- matrix maximum
///   5. divide by matrix maximum
///   6. threshold = quantile of the weights
///   7. entries strictly below the threshold <- 0
inline AdjacencyMatrix build_adjacency(
    const Matrix& distances_km, double threshold_quantile = 0.75,
    PercentileDomain domain = PercentileDomain::kOffDiagonal) {
  const int n = static_cast<int>(distances_km.rows());
  if (n < 2 || distances_km.cols() != n)
    throw DataError("distance matrix must be square with N >= 2");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (distances_km(i, j) != distances_km(j, i))
        throw DataError("distance matrix asymmetric at [" + std::to_string(i) +
                        "][" + std::to_string(j) + "]");
      if (distances_km(i, j) <= 0.0 || !std::isfinite(distances_km(i, j)))
        throw DataError("distances must be positive and finite off-diagonal");
    }
  if (threshold_quantile < 0.0 || threshold_quantile > 1.0)
    throw UsageError("threshold quantile must be in [0,1]");

  Matrix d = distances_km;
  for (int i = 0; i < n; ++i) d(i, i) = kDiagonalSentinelKm;

  const double d_min = d.minCoeff();
  Matrix w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w(i, j) = d_min / d(i, j);

  const double w_max = w.maxCoeff();
  for (int i = 0; i < n; ++i) w(i, i) = w_max;
  w /= w_max;

  std::vector<double> pool;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (domain == PercentileDomain::kAll || i != j) pool.push_back(w(i, j));
  const double threshold = quantile_linear(std::move(pool), threshold_quantile);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (w(i, j) < threshold) w(i, j) = 0.0;

  AdjacencyMatrix a;
  a.weights = std::move(w);
  a.threshold_quantile = threshold_quantile;
  a.domain = domain;
  a.source_digest = fnv1a64(distances_km.data(),
                            sizeof(double) * static_cast<std::size_t>(n) * n);
  return a;
}

struct AdjacencyReport {
  std::vector<std::string> violations;
  double sparsity = 0.0;  // fraction of zero off-diagonal entries

  bool ok() const { return violations.empty(); }
};

/// Checks the structural invariants without throwing.
inline AdjacencyReport validate_adjacency(const Matrix& w) {
  AdjacencyReport r;
  const int n = static_cast<int>(w.rows());
  if (w.cols() != n) {
    r.violations.push_back("matrix is not square");
    return r;
  }
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    if (w(i, i) != 1.0)
      r.violations.push_back("diagonal entry [" + std::to_string(i) + "] is " +
                             std::to_string(w(i, i)) + ", expected 1");
    for (int j = 0; j < n; ++j) {
      if (w(i, j) < 0.0 || w(i, j) > 1.0)
        r.violations.push_back("entry [" + std::to_string(i) + "][" +
                               std::to_string(j) + "] outside [0,1]");
      if (j > i && w(i, j) != w(j, i))
        r.violations.push_back("asymmetric at [" + std::to_string(i) + "][" +
                               std::to_string(j) + "]");
      if (i != j && w(i, j) == 0.0) ++zeros;
    }
  }
  if (n > 1) r.sparsity = static_cast<double>(zeros) / (static_cast<double>(n) * (n - 1));
  return r;
}

}  // namespace scgnn
