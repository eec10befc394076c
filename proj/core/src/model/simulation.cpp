#include "msurr/model/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msurr/error.hpp"

namespace msurr::model {
namespace {

// Stream ids for derive_seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kCalibrationStream = 2;
constexpr std::uint64_t kMainStream = 3;

constexpr double kScaleMin = 1e-2;
constexpr double kScaleMax = 1e12;
// Beyond this log-EIR mismatch the false-position step is unreliable and we
// bisect instead.
constexpr double kBisectAbove = 3.0;
// Narrowest log-scale bracket worth refining.
constexpr double kMinBracket = 1e-3;

std::array<double, kSpecies> alphas(const SiteParams& site) {
  std::array<double, kSpecies> a{};
  for (int v = 0; v < kSpecies; ++v) a[v] = site.species[v].alpha;
  return a;
}

std::array<double, kSpecies> k0_for(const SiteParams& site, double scale, std::size_t n) {
  std::array<double, kSpecies> k0{};
  for (int v = 0; v < kSpecies; ++v) k0[v] = scale * site.kappa[v] * static_cast<double>(n);
  return k0;
}

}  // namespace

void SimConfig::validate() const {
  params.validate();
  if (population < 1) throw ConfigError("population must be non-empty");
  if (warmup_years < 0) throw ConfigError("warmup_years must be non-negative");
  if (calibration_years < 1) throw ConfigError("calibration_years must be at least 1");
  if (!(calibration_tolerance > 0.0)) throw ConfigError("calibration_tolerance must be positive");
  if (calibration_max_evaluations < 2) throw ConfigError("calibration_max_evaluations must be at least 2");
}

std::optional<double> SimOutput::year_mean(int year) const {
  double sum = 0.0;
  int n = 0;
  for (int d = 0; d < kDaysPerYear; ++d) {
    const double x = at(year, d);
    if (std::isnan(x)) continue;
    sum += x;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

Simulation::Simulation(Population population, const SiteParams& site, const GlobalParams& params,
                       const std::array<double, kSpecies>& k0, std::uint64_t seed)
    : population_(std::move(population)),
      site_(site),
      params_(params),
      capacity_(site.rainfall),
      mosquitoes_(k0, foim(population_, alphas(site)), params),
      rng_(seed),
      alpha_(alphas(site)) {
  const double initial = alpha_[0] > 0.0 ? foim(population_, alpha_)[0] / alpha_[0] : 0.0;
  const auto slots = static_cast<std::size_t>(std::ceil(params_.delay_gam)) + 2;
  infectivity_history_.assign(slots, initial);
}

double Simulation::lagged_infectivity() const {
  const auto n = infectivity_history_.size();
  const double lag = params_.delay_gam;
  const auto whole = static_cast<std::size_t>(std::floor(lag));
  const double frac = lag - static_cast<double>(whole);
  auto ago = [&](std::size_t k) { return infectivity_history_[(history_pos_ + n - 1 - k) % n]; };
  return (1.0 - frac) * ago(whole) + frac * ago(whole + 1);
}

Simulation::DayResult Simulation::step_day() {
  DayResult out;
  const auto eir = eir_by_species(mosquitoes_, alpha_, population_.size());
  for (double e : eir) out.eir += e;
  out.summary = population_.step(eir, rng_);

  infectivity_history_[history_pos_] = out.summary.infectivity;
  history_pos_ = (history_pos_ + 1) % infectivity_history_.size();
  const double infectious = params_.gametocyte_lag ? lagged_infectivity() : out.summary.infectivity;

  std::array<double, kSpecies> lambda_m{};
  for (int v = 0; v < kSpecies; ++v) {
    lambda_m[v] = alpha_[v] * infectious;
    extra_mortality_[v] = alpha_[v] * out.summary.net_kill[v];
  }
  mosquitoes_.step_day(lambda_m, capacity_, static_cast<int>(day_ % kDaysPerYear), extra_mortality_);
  ++day_;
  return out;
}

std::size_t Simulation::distribute_nets(double nu) {
  if (!(nu > 0.0)) return 0;
  return population_.apply_itn_round(nu, rng_);
}

Population initial_population(const SiteParams& site, const SimConfig& config) {
  Rng rng(derive_seed(config.seed, kInitStream));
  return Population::at_equilibrium(config.population, site, config.params, site.eir0 / kDaysPerYear, rng);
}

double calibration_eir(const SiteParams& site, const SimConfig& config, const Population& start, double scale) {
  Simulation sim(start, site, config.params, k0_for(site, scale, start.size()),
                 derive_seed(config.seed, kCalibrationStream));
  const int days = config.calibration_years * kDaysPerYear;
  double measured = 0.0;
  for (int d = 0; d < days; ++d) {
    const double eir = sim.step_day().eir;
    if (d >= days - kDaysPerYear) measured += eir;
  }
  return measured;
}

CalibrationResult calibrate_k0(const SiteParams& site, const SimConfig& config) {
  return calibrate_k0(site, config, initial_population(site, config));
}

CalibrationResult calibrate_k0(const SiteParams& site, const SimConfig& config, const Population& start) {
  config.validate();
  const double target = site.eir0;
  if (!(target > 0.0)) throw ConfigError("baseline EIR must be positive");

  CalibrationResult result;
  double best_x = 0.0, best_f = std::numeric_limits<double>::infinity();
  const double tol = config.calibration_tolerance;
  // Residual in log space; -inf-like values for extinct transmission.
  auto evaluate = [&](double log_scale) {
    if (result.evaluations >= config.calibration_max_evaluations) {
      throw DomainError("EIR target unattainable: calibration did not converge");
    }
    ++result.evaluations;
    const double eir = calibration_eir(site, config, start, std::exp(log_scale));
    const double f = std::log(std::max(eir, 1e-300)) - std::log(target);
    if (std::fabs(f) < std::fabs(best_f)) {
      best_x = log_scale;
      best_f = f;
    }
    return f;
  };
  auto accept = [&](double log_scale, double f) {
    result.scale = std::exp(log_scale);
    result.achieved_eir = target * std::exp(f);
    result.k0 = k0_for(site, result.scale, start.size());
    return result;
  };
  auto converged = [&](double f) { return std::fabs(std::expm1(f)) <= tol; };

  const double log_min = std::log(kScaleMin), log_max = std::log(kScaleMax);
  double x0 = 0.0;
  double f0 = evaluate(x0);
  if (converged(f0)) return accept(x0, f0);
  // Transmission is roughly linear in K0: jump straight to the proportional guess.
  if (f0 > -kBisectAbove * 10.0) {
    const double x1 = std::clamp(x0 - f0, log_min, log_max);
    const double f1 = evaluate(x1);
    if (converged(f1)) return accept(x1, f1);
    x0 = x1;
    f0 = f1;
  }

  // Expand geometrically until the residual changes sign.
  double lo = x0, flo = f0, hi = x0, fhi = f0;
  const double step = std::log(4.0);
  if (f0 < 0.0) {
    while (fhi < 0.0) {
      lo = hi;
      flo = fhi;
      if (hi >= log_max) throw DomainError("EIR target unattainable");
      hi = std::min(hi + step, log_max);
      fhi = evaluate(hi);
      if (converged(fhi)) return accept(hi, fhi);
    }
  } else {
    while (flo > 0.0) {
      hi = lo;
      fhi = flo;
      if (lo <= log_min) throw DomainError("EIR target unattainable");
      lo = std::max(lo - step, log_min);
      flo = evaluate(lo);
      if (converged(flo)) return accept(lo, flo);
    }
  }

  // Illinois false position, bisecting while either end is far off.
  int side = 0;
  for (;;) {
    double x;
    if (std::fabs(flo) > kBisectAbove || std::fabs(fhi) > kBisectAbove) {
      x = 0.5 * (lo + hi);
    } else {
      x = (lo * fhi - hi * flo) / (fhi - flo);
      if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    }
    const double f = evaluate(x);
    if (converged(f)) return accept(x, f);
    if (hi - lo < kMinBracket) {
      // Common random numbers make EIR piecewise smooth in the scale; a
      // jump straddling the target cannot be resolved further.
      return accept(best_x, best_f);
    }
    if (f < 0.0) {
      lo = x;
      flo = f;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = f;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
  }
}

SimOutput run_simulation(const ScenarioParams& scenario, int years, const SimConfig& config, SimRunInfo* info) {
  scenario.validate();
  return run_simulation(site_from_scenario(scenario), scenario.id, scenario.nu, years, config, info);
}

SimOutput run_simulation(const SiteParams& site, std::string id, const std::vector<double>& nu, int years,
                         const SimConfig& config, SimRunInfo* info) {
  config.validate();
  if (years < 1) throw ConfigError("years must be at least 1");
  for (double x : nu) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("ITN usage must lie in [0, 1]");
  }
  const Population start = initial_population(site, config);
  const CalibrationResult calibration = calibrate_k0(site, config, start);

  Simulation sim(start, site, config.params, calibration.k0, derive_seed(config.seed, kMainStream));
  SimRunInfo local;
  local.calibration = calibration;
  const int warmup_days = config.warmup_years * kDaysPerYear;
  for (int d = 0; d < warmup_days; ++d) {
    const double eir = sim.step_day().eir;
    if (d >= warmup_days - kDaysPerYear) local.warmup_eir += eir;
  }

  SimOutput out;
  out.id = std::move(id);
  out.seed = config.seed;
  out.years = years;
  out.prevalence.reserve(static_cast<std::size_t>(years) * kDaysPerYear);
  for (int y = 0; y < years; ++y) {
    const double coverage = nu.empty() ? 0.0 : nu[std::min<std::size_t>(static_cast<std::size_t>(y), nu.size() - 1)];
    sim.distribute_nets(coverage);
    double annual = 0.0;
    for (int d = 0; d < kDaysPerYear; ++d) {
      annual += sim.step_day().eir;
      const auto p = prevalence(sim.population(), kBandLowerDays, kBandUpperDays);
      out.prevalence.push_back(p ? *p : std::numeric_limits<double>::quiet_NaN());
    }
    local.annual_eir.push_back(annual);
  }
  local.clamp_events = sim.mosquitoes().clamp_events();
  if (info) *info = std::move(local);
  return out;
}

}  // namespace msurr::model
