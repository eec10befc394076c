#include "msurr/model/rainfall.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "msurr/error.hpp"

namespace msurr::model {

double rainfall(const RainfallCoefficients& c, double t) {
  const double phase = t - std::floor(t);
  const double w = 2.0 * std::numbers::pi * phase;
  double r = c.g0;
  for (int i = 0; i < 3; ++i) {
    const double x = w * (i + 1);
    r += c.g[i] * std::cos(x) + c.h[i] * std::sin(x);
  }
  return std::max(r, 0.0);
}

double mean_rainfall(const RainfallCoefficients& c) {
  double sum = 0.0;
  for (int d = 0; d < kDaysPerYear; ++d) sum += rainfall(c, static_cast<double>(d) / kDaysPerYear);
  return sum / kDaysPerYear;
}

CarryingCapacity::CarryingCapacity(const RainfallCoefficients& c)
    : coeffs_(c), mean_(mean_rainfall(c)) {
  if (!(mean_ > 0.0)) throw ConfigError("non-positive mean rainfall");
}

double CarryingCapacity::operator()(double k0, double t) const {
  return std::max(k0 * rainfall(coeffs_, t) / mean_, kFloorFraction * k0);
}

}  // namespace msurr::model
