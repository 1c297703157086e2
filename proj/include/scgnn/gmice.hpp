#pragma once

#include "scgnn/common.hpp"

#include <cmath>
#include <limits>

namespace scgnn {
namespace gmice {

// EMS-98 ground-motion-to-intensity conversion, I = 2.03 + 2.28*log10(PGA),
// valid on [2, 9.5] with PGA in cm/s^2.
constexpr double kOffset = 2.03;
constexpr double kSlope = 2.28;
constexpr double kIntensityFloor = 2.0;
constexpr double kIntensityCeil = 9.5;

struct IntensityResult {
  double value = 0.0;   // clamped EMS-98 intensity
  double raw = 0.0;     // pre-clamp value
  bool clamped = false;
  bool degenerate = false;  // pga <= 0, log undefined
};

inline IntensityResult pga_to_intensity(double pga_cm_s2) {
  IntensityResult r;
  if (pga_cm_s2 <= 0.0) {
    r.value = kIntensityFloor;
    r.raw = -std::numeric_limits<double>::infinity();
    r.clamped = true;
    r.degenerate = true;
    return r;
  }
  r.raw = kOffset + kSlope * std::log10(pga_cm_s2);
  r.value = r.raw;
  if (r.value < kIntensityFloor) {
    r.value = kIntensityFloor;
    r.clamped = true;
  } else if (r.value > kIntensityCeil) {
    r.value = kIntensityCeil;
    r.clamped = true;
  }
  return r;
}

/// Analytic inverse on the valid range; throws on out-of-range intensity.
inline double intensity_to_pga(double intensity) {
  if (intensity < kIntensityFloor || intensity > kIntensityCeil)
    throw DataError("intensity " + std::to_string(intensity) +
                    " outside [2, 9.5]");
  return std::pow(10.0, (intensity - kOffset) / kSlope);
}

}  // namespace gmice
}  // namespace scgnn
