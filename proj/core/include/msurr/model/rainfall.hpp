#pragma once

#include "msurr/model/params.hpp"

namespace msurr::model {

/// Seasonal rainfall at fraction-of-year t, clamped below at zero. The
/// series has period one; t is reduced modulo 1 before evaluation.
double rainfall(const RainfallCoefficients& c, double t);

/// Annual mean of rainfall() by 365-point rectangular quadrature over the
/// daily grid d/365. Exact for the unclamped series (equals g0).
double mean_rainfall(const RainfallCoefficients& c);

/// Rainfall-modulated carrying capacity K0 * R(t) / Rbar with a floor of
/// 1e-6 * K0. Precomputes Rbar; throws ConfigError when Rbar <= 0.
class CarryingCapacity {
 public:
  CarryingCapacity(const RainfallCoefficients& c);

  double operator()(double k0, double t) const;
  double mean_rain() const { return mean_; }

  static constexpr double kFloorFraction = 1e-6;

 private:
  RainfallCoefficients coeffs_;
  double mean_;
};

}  // namespace msurr::model
