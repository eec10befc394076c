#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msurr/model/mosquito.hpp"
#include "msurr/model/params.hpp"
#include "msurr/model/population.hpp"
#include "msurr/model/rainfall.hpp"
#include "msurr/rng.hpp"

namespace msurr::model {

struct SimConfig {
  GlobalParams params;
  std::size_t population = 2000;
  int warmup_years = 3;
  int calibration_years = 2;      // length of each calibration run; the last year is measured
  double calibration_tolerance = 0.02;  // relative, on mean annual EIR
  int calibration_max_evaluations = 60;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Daily prevalence in the 5-59 month band, `years` x 365 values, with NaN
/// marking days on which nobody was in the band.
struct SimOutput {
  std::string id;
  std::uint64_t seed = 0;
  int years = 0;
  std::vector<double> prevalence;

  double at(int year, int day) const { return prevalence[static_cast<std::size_t>(year) * kDaysPerYear + day]; }
  /// Mean over a year skipping missing days; nullopt when all are missing.
  std::optional<double> year_mean(int year) const;
};

struct CalibrationResult {
  double scale = 0.0;                     // K0^v = scale * kappa^v * N
  std::array<double, kSpecies> k0{};
  double achieved_eir = 0.0;              // mean annual EIR of the final evaluation
  int evaluations = 0;
};

/// Coupled human / mosquito simulation advanced one day at a time.
class Simulation {
 public:
  Simulation(Population population, const SiteParams& site, const GlobalParams& params,
             const std::array<double, kSpecies>& k0, std::uint64_t seed);

  struct DayResult {
    double eir = 0.0;  // infectious bites per person on this day
    DailySummary summary;
  };

  DayResult step_day();

  /// Hand out nets at coverage `nu` (0 is a no-op).
  std::size_t distribute_nets(double nu);

  const Population& population() const { return population_; }
  const MosquitoModel& mosquitoes() const { return mosquitoes_; }
  std::int64_t day() const { return day_; }

 private:
  double lagged_infectivity() const;

  Population population_;
  SiteParams site_;
  GlobalParams params_;
  CarryingCapacity capacity_;
  MosquitoModel mosquitoes_;
  Rng rng_;
  std::array<double, kSpecies> alpha_{};
  std::vector<double> infectivity_history_;  // daily ring, newest at history_pos_ - 1
  std::size_t history_pos_ = 0;
  std::array<double, kSpecies> extra_mortality_{};
  std::int64_t day_ = 0;
};

/// Equilibrium starting roster used by both calibration and the main run.
Population initial_population(const SiteParams& site, const SimConfig& config);

/// Mean annual EIR over the final year of a nets-free run of
/// `config.calibration_years` at the given K0 scale, from a fixed starting
/// roster and fixed random stream (common random numbers across scales).
double calibration_eir(const SiteParams& site, const SimConfig& config, const Population& start, double scale);

/// Find the K0 scale whose nets-free EIR matches site.eir0 within the
/// configured tolerance. Throws DomainError("EIR target unattainable") when
/// no bracket exists in [1e-2, 1e12].
CalibrationResult calibrate_k0(const SiteParams& site, const SimConfig& config);
CalibrationResult calibrate_k0(const SiteParams& site, const SimConfig& config, const Population& start);

struct SimRunInfo {
  CalibrationResult calibration;
  double warmup_eir = 0.0;  // mean annual EIR over the last warm-up year
  std::vector<double> annual_eir;  // per simulated year
  std::uint64_t clamp_events = 0;
};

/// Calibrate, warm up without nets, then simulate `years` years applying
/// scenario.nu[t] at the start of year t (years beyond nu reuse its last
/// value, or 0 when empty).
SimOutput run_simulation(const ScenarioParams& scenario, int years, const SimConfig& config,
                         SimRunInfo* info = nullptr);

/// Same, for a full site description (per-species bionomics preserved).
SimOutput run_simulation(const SiteParams& site, std::string id, const std::vector<double>& nu, int years,
                         const SimConfig& config, SimRunInfo* info = nullptr);

}  // namespace msurr::model
