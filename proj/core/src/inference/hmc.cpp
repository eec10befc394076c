#include "msurr/inference/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "msurr/error.hpp"

namespace msurr::inference {
namespace {

constexpr std::uint64_t kChainStream = 1;
constexpr std::uint64_t kShared = 2;
constexpr double kDivergence = 1000.0;  // energy error treated as a divergence

// Dual averaging constants (Hoffman & Gelman 2014).
constexpr double kGamma = 0.05;
constexpr double kT0 = 10.0;
constexpr double kKappa = 0.75;

struct DualAveraging {
  double mu = 0.0, h_bar = 0.0, log_eps = 0.0, log_eps_bar = 0.0;
  int t = 0;

  explicit DualAveraging(double eps) : mu(std::log(10.0 * eps)), log_eps(std::log(eps)) {}

  void update(double accept, double target) {
    ++t;
    const double w = 1.0 / (t + kT0);
    h_bar = (1.0 - w) * h_bar + w * (target - accept);
    log_eps = mu - std::sqrt(static_cast<double>(t)) / kGamma * h_bar;
    const double k = std::pow(static_cast<double>(t), -kKappa);
    log_eps_bar = k * log_eps + (1.0 - k) * log_eps_bar;
  }
};

}  // namespace

void HmcConfig::validate() const {
  if (chains < 1) throw ConfigError("chains must be at least 1");
  if (warmup < 0 || steps <= warmup) throw ConfigError("steps must exceed warmup, and warmup must be non-negative");
  if (leapfrog < 1) throw ConfigError("leapfrog steps must be at least 1");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("leapfrog jitter must lie in [0, 1)");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("target acceptance must lie in (0, 1)");
  if (max_init_attempts < 1) throw ConfigError("max_init_attempts must be at least 1");
}

void leapfrog(const BatchLogDensity& density, std::span<double> theta, std::span<double> momentum,
              std::span<double> log_density, std::span<double> gradient, std::span<const double> step_size, int steps,
              std::span<const char> active) {
  const std::size_t n = theta.size();
  auto on = [&](std::size_t i) { return active.empty() || active[i]; };
  std::vector<double> lp(n), g(n);
  for (int s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!on(i)) continue;
      momentum[i] += 0.5 * step_size[i] * gradient[i];
      theta[i] += step_size[i] * momentum[i];
    }
    density(theta, lp, g);
    for (std::size_t i = 0; i < n; ++i) {
      if (!on(i)) continue;
      log_density[i] = lp[i];
      gradient[i] = g[i];
      momentum[i] += 0.5 * step_size[i] * gradient[i];
    }
  }
}

HmcResult hmc_sample(const BatchLogDensity& density, const std::function<double(Rng&)>& init, const HmcConfig& config,
                     const std::function<void(int)>& progress) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.chains);
  std::vector<Rng> rng;
  for (std::size_t c = 0; c < n; ++c) rng.emplace_back(derive_seed(derive_seed(config.seed, kChainStream), c));
  Rng shared(derive_seed(config.seed, kShared));
  HmcResult result;
  result.chains.resize(n);

  std::vector<double> theta(n), lp(n), grad(n);
  auto evaluate = [&](std::span<const double> at, std::span<double> l, std::span<double> g) {
    density(at, l, g);
    ++result.gradient_evaluations;
  };

  // Initial positions, redrawn where the density is not finite.
  for (std::size_t c = 0; c < n; ++c) theta[c] = init(rng[c]);
  evaluate(theta, lp, grad);
  for (int attempt = 1;; ++attempt) {
    bool all = true;
    for (std::size_t c = 0; c < n; ++c) all = all && std::isfinite(lp[c]) && std::isfinite(grad[c]);
    if (all) break;
    if (attempt >= config.max_init_attempts) {
      throw DomainError("could not find a starting point with finite log-posterior after " +
                        std::to_string(config.max_init_attempts) + " attempts");
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (!(std::isfinite(lp[c]) && std::isfinite(grad[c]))) theta[c] = init(rng[c]);
    }
    evaluate(theta, lp, grad);
  }

  std::vector<double> eps(n, config.initial_step_size);
  if (config.initial_step_size <= 0.0) {
    // Doubling/halving until one leapfrog step crosses acceptance 1/2.
    std::fill(eps.begin(), eps.end(), 1.0);
    std::vector<double> p0(n), th(n), p(n), l(n), g(n);
    for (std::size_t c = 0; c < n; ++c) p0[c] = rng[c].normal();
    std::vector<int> direction(n, 0);
    std::vector<char> active(n, 1);
    for (int iter = 0; iter < 60; ++iter) {
      th = theta;
      p = p0;
      l = lp;
      g = grad;
      leapfrog(evaluate, th, p, l, g, eps, 1);
      bool any = false;
      for (std::size_t c = 0; c < n; ++c) {
        if (!active[c]) continue;
        const double log_ratio = (l[c] - 0.5 * p[c] * p[c]) - (lp[c] - 0.5 * p0[c] * p0[c]);
        const bool good = std::isfinite(log_ratio) && log_ratio > std::log(0.5);
        if (direction[c] == 0) direction[c] = good ? 1 : -1;
        if ((direction[c] == 1) != good || eps[c] < 1e-8 || eps[c] > 1e4) {
          active[c] = 0;
          continue;
        }
        eps[c] = direction[c] == 1 ? eps[c] * 2.0 : eps[c] * 0.5;
        any = true;
      }
      if (!any) break;
    }
  }
  std::vector<DualAveraging> adapt;
  for (double e : eps) adapt.emplace_back(e);

  std::vector<double> p0(n), th(n), p(n), l(n), g(n), accept(n);
  std::vector<char> live(n);
  for (int it = 0; it < config.steps; ++it) {
    const double u = shared.uniform();
    const int steps = std::max(1, static_cast<int>(std::lround(config.leapfrog * (1.0 + config.jitter * (2.0 * u - 1.0)))));
    for (std::size_t c = 0; c < n; ++c) p0[c] = rng[c].normal();
    th = theta;
    p = p0;
    l = lp;
    g = grad;
    std::fill(live.begin(), live.end(), 1);
    std::vector<char> divergent(n, 0);
    // Step one at a time so diverging chains can be frozen.
    for (int s = 0; s < steps; ++s) {
      leapfrog(evaluate, th, p, l, g, eps, 1, live);
      for (std::size_t c = 0; c < n; ++c) {
        if (!live[c]) continue;
        const double h = -l[c] + 0.5 * p[c] * p[c];
        const double h0 = -lp[c] + 0.5 * p0[c] * p0[c];
        if (!std::isfinite(h) || !std::isfinite(g[c]) || h - h0 > kDivergence) {
          live[c] = 0;
          divergent[c] = 1;
        }
      }
    }
    const bool warming = it < config.warmup;
    for (std::size_t c = 0; c < n; ++c) {
      double a = 0.0;
      if (!divergent[c]) {
        const double log_ratio = (l[c] - 0.5 * p[c] * p[c]) - (lp[c] - 0.5 * p0[c] * p0[c]);
        a = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
      }
      accept[c] = a;
      if (rng[c].uniform() < a) {
        theta[c] = th[c];
        lp[c] = l[c];
        grad[c] = g[c];
      }
      if (warming) {
        adapt[c].update(a, config.target_accept);
        eps[c] = it + 1 == config.warmup ? std::exp(adapt[c].log_eps_bar) : std::exp(adapt[c].log_eps);
      } else {
        auto& chain = result.chains[c];
        chain.draws.push_back({theta[c], lp[c], a, divergent[c] != 0});
        chain.divergences += divergent[c];
        chain.mean_accept += a;
      }
    }
    if (progress) progress(it + 1);
  }
  for (std::size_t c = 0; c < n; ++c) {
    auto& chain = result.chains[c];
    chain.step_size = eps[c];
    chain.mean_accept /= static_cast<double>(chain.draws.size());
  }
  return result;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ConfigError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

double mean_of(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

double unbiased_variance(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// (n−1)/n·W + B/n over equal-length chains; also returns W.
std::pair<double, double> variance_parts(const std::vector<std::span<const double>>& chains) {
  std::vector<double> means, vars;
  for (auto c : chains) {
    means.push_back(mean_of(c));
    vars.push_back(unbiased_variance(c));
  }
  const double n = static_cast<double>(chains.front().size());
  const double w = mean_of(vars);
  const double b_over_n = chains.size() > 1 ? unbiased_variance(means) : 0.0;
  return {(n - 1.0) / n * w + b_over_n, w};
}

}  // namespace

Diagnostics diagnose(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw ConfigError("no chains to diagnose");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw ConfigError("chains must have equal length");
  }
  if (n < 2) throw ConfigError("chains need at least two draws");
  Diagnostics d;
  d.chains = static_cast<int>(chains.size());
  d.draws = n * chains.size();
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  d.mean = mean_of(pooled);
  d.sd = std::sqrt(unbiased_variance(pooled));
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Split-R̂: each chain halved, so within-chain trends inflate it.
  d.rhat = nan;
  if (chains.size() >= 2 && n >= 4) {
    std::vector<std::span<const double>> halves;
    const std::size_t half = n / 2;
    for (const auto& c : chains) {
      halves.emplace_back(c.data(), half);
      halves.emplace_back(c.data() + (n - half), half);
    }
    const auto [var_plus, w] = variance_parts(halves);
    if (w > 0.0) {
      d.rhat = std::sqrt(var_plus / w);
      d.rhat_defined = true;
    }
  }

  // ESS: ρ_t = 1 − (W − mean autocovariance_t) / var+, summed in pairs
  // while positive and forced monotone (Geyer).
  std::vector<std::span<const double>> full;
  for (const auto& c : chains) full.emplace_back(c);
  const auto [var_plus, w] = variance_parts(full);
  if (!(w > 0.0)) {
    d.ess = nan;
    return d;
  }
  std::vector<double> means;
  for (auto c : full) means.push_back(mean_of(c));
  auto autocov = [&](std::size_t lag) {
    double total = 0.0;
    for (std::size_t k = 0; k < full.size(); ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) s += (full[k][i] - means[k]) * (full[k][i + lag] - means[k]);
      total += s / static_cast<double>(n);
    }
    return total / static_cast<double>(full.size());
  };
  auto rho = [&](std::size_t lag) { return lag == 0 ? 1.0 : 1.0 - (w - autocov(lag)) / var_plus; };
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  const double total = static_cast<double>(d.draws);
  d.ess = std::min(total / std::max(tau, 1.0 / std::log10(total)), total * std::log10(total));
  return d;
}

}  // namespace msurr::inference
