#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "msurr/rng.hpp"

namespace msurr::inference {

/// Log-density and gradient for a batch of one-dimensional positions, one
/// per chain. Non-finite log-densities mark forbidden positions.
using BatchLogDensity =
    std::function<void(std::span<const double> theta, std::span<double> log_density, std::span<double> gradient)>;

struct HmcConfig {
  int chains = 10;
  int steps = 2000;   // per chain, including warm-up
  int warmup = 1000;  // discarded; step size adapted
  int leapfrog = 32;
  double jitter = 0.2;  // leapfrog count drawn uniformly in leapfrog·(1 ± jitter)
  double target_accept = 0.8;
  double initial_step_size = 0.0;  // <= 0: chosen by the doubling heuristic
  int max_init_attempts = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

struct HmcDraw {
  double theta = 0.0;
  double log_density = 0.0;
  double accept_prob = 0.0;
  bool divergent = false;
};

struct HmcChain {
  std::vector<HmcDraw> draws;  // post-warm-up
  double step_size = 0.0;      // adapted
  int divergences = 0;         // post-warm-up
  double mean_accept = 0.0;    // post-warm-up
};

struct HmcResult {
  std::vector<HmcChain> chains;
  long gradient_evaluations = 0;  // batch evaluations
};

/// Hamiltonian Monte Carlo with an identity mass matrix. All chains advance
/// in lockstep so every leapfrog step costs one batched density call: the
/// leapfrog count of each iteration is shared (drawn from a common stream),
/// while momenta, accept decisions and dual-averaging step sizes are per
/// chain. `init` draws a starting position; positions with a non-finite
/// density are redrawn up to max_init_attempts times before DomainError.
/// `progress(iteration)` is called after every iteration when set.
HmcResult hmc_sample(const BatchLogDensity& density, const std::function<double(Rng&)>& init, const HmcConfig& config,
                     const std::function<void(int)>& progress = {});

/// Leapfrog integration of `steps` steps for a batch of positions, updating
/// theta, momentum, log-density and gradient in place. Entries with
/// active[i] == 0 are left untouched (but still evaluated).
void leapfrog(const BatchLogDensity& density, std::span<double> theta, std::span<double> momentum,
              std::span<double> log_density, std::span<double> gradient, std::span<const double> step_size, int steps,
              std::span<const char> active = {});

struct Diagnostics {
  double mean = 0.0;
  double sd = 0.0;
  double rhat = 0.0;       // split-R̂; NaN when undefined
  bool rhat_defined = false;
  double ess = 0.0;        // NaN for zero-variance draws
  std::size_t draws = 0;
  int chains = 0;
};

/// Split-R̂ (needs two or more chains of at least four draws) and the
/// multi-chain effective sample size with Geyer's initial monotone sequence.
Diagnostics diagnose(const std::vector<std::vector<double>>& chains);

/// Sample quantile with linear interpolation between order statistics
/// (x[(n−1)q]); `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace msurr::inference
