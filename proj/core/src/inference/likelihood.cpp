#include "msurr/inference/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msurr/error.hpp"

namespace msurr::inference {
namespace {

constexpr int kMonthLength[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

std::pair<int, int> month_days(int month) {
  if (month < 1 || month > 12) throw ConfigError("month must lie in 1..12, got " + std::to_string(month));
  int first = 0;
  for (int m = 1; m < month; ++m) first += kMonthLength[m - 1];
  return {first, first + kMonthLength[month - 1]};
}

double monthly_prevalence(const surrogate::Trajectory& trajectory, int year, int month) {
  const auto [first, last] = month_days(month);
  if (trajectory.rows() != 365) throw ConfigError("trajectory must have 365 rows");
  if (year < 0 || year >= trajectory.cols()) {
    throw ConfigError("year " + std::to_string(year) + " is outside the trajectory");
  }
  return trajectory.col(year).segment(first, last - first).mean();
}

std::vector<BoundObservation> bind_observations(const io::ObservationSet& obs, int first_year, int years) {
  std::vector<BoundObservation> out;
  out.reserve(obs.records.size());
  for (const auto& r : obs.records) {
    const int y = r.year - first_year;
    if (y < 0 || y >= years) {
      throw ConfigError("observation " + std::to_string(r.year) + "/" + std::to_string(r.month) +
                        " lies outside the simulated years " + std::to_string(first_year) + ".." +
                        std::to_string(first_year + years - 1));
    }
    if (r.month < 1 || r.month > 12) throw ConfigError("observation month must lie in 1..12");
    if (!(r.negative >= 0.0 && r.positive >= 0.0) || r.negative + r.positive <= 0.0) {
      throw ConfigError("observation counts must be non-negative and not both zero");
    }
    out.push_back({y, r.month, r.negative, r.positive});
  }
  return out;
}

double log_likelihood(const surrogate::Trajectory& trajectory, std::span<const BoundObservation> obs,
                      surrogate::Trajectory* d_trajectory, double epsilon) {
  if (d_trajectory) d_trajectory->setZero(trajectory.rows(), trajectory.cols());
  double total = 0.0;
  for (const auto& o : obs) {
    const double raw = monthly_prevalence(trajectory, o.year, o.month);
    const double p = std::clamp(raw, epsilon, 1.0 - epsilon);
    total += o.positive * std::log(p) + o.negative * std::log1p(-p);
    if (d_trajectory && raw > epsilon && raw < 1.0 - epsilon) {
      const auto [first, last] = month_days(o.month);
      const double dp = o.positive / p - o.negative / (1.0 - p);
      d_trajectory->col(o.year).segment(first, last - first).array() += dp / (last - first);
    }
  }
  return total;
}

double eir_to_theta(double eir0) {
  if (!(eir0 > 0.0 && eir0 < kEirMax)) {
    throw DomainError("baseline EIR must lie strictly inside (0, " + std::to_string(kEirMax) + ")");
  }
  const double u = eir0 / kEirMax;
  return std::log(u) - std::log1p(-u);
}

double theta_to_eir(double theta) { return kEirMax * logistic(theta); }

double log_jacobian(double theta) {
  // log s(θ) + log(1 − s(θ)) = −softplus(−θ) − softplus(θ)
  const double a = std::fabs(theta);
  return std::log(kEirMax) - a - 2.0 * std::log1p(std::exp(-a));
}

double log_jacobian_gradient(double theta) { return 1.0 - 2.0 * logistic(theta); }

}  // namespace msurr::inference
