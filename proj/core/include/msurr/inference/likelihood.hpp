#pragma once

#include <span>
#include <utility>
#include <vector>

#include "msurr/io/observations.hpp"
#include "msurr/surrogate/model.hpp"

namespace msurr::inference {

/// Day range [first, last) of a calendar month (1..12) on the 365-day model
/// year, standard month lengths with a 28-day February.
std::pair<int, int> month_days(int month);

/// Mean daily prevalence over a calendar month of trajectory year `year`.
/// Throws ConfigError for a month outside 1..12 or a year outside the trajectory.
double monthly_prevalence(const surrogate::Trajectory& trajectory, int year, int month);

/// An observation located on the trajectory: `year` counts from the first
/// simulated year.
struct BoundObservation {
  int year = 0;
  int month = 1;
  double negative = 0.0;
  double positive = 0.0;
};

/// Place observations on a trajectory starting in calendar year
/// `first_year` and spanning `years` years; throws ConfigError for records
/// outside that span or with invalid counts.
std::vector<BoundObservation> bind_observations(const io::ObservationSet& obs, int first_year, int years);

/// Clamp applied to monthly prevalence before taking logs.
inline constexpr double kPrevalenceClamp = 1e-6;

/// Binomial log-density with real-valued counts (up to the constant
/// log-binomial coefficient): Σ pos·log p + neg·log(1 − p), p clamped to
/// [ε, 1 − ε]. When `d_trajectory` is given it receives dL/dtrajectory
/// (zero on clamped months).
double log_likelihood(const surrogate::Trajectory& trajectory, std::span<const BoundObservation> obs,
                      surrogate::Trajectory* d_trajectory = nullptr, double epsilon = kPrevalenceClamp);

/// Uniform prior on Λ₀ ∈ (0, kEirMax), sampled as θ = logit(Λ₀ / kEirMax).
inline constexpr double kEirMax = 500.0;

double eir_to_theta(double eir0);  // throws DomainError outside (0, kEirMax)
double theta_to_eir(double theta);
/// log |dΛ₀/dθ| = log(kEirMax · s(θ)(1 − s(θ))), s the logistic function.
double log_jacobian(double theta);
double log_jacobian_gradient(double theta);  // 1 − 2 s(θ)

}  // namespace msurr::inference
