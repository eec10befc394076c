#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "msurr/inference/hmc.hpp"
#include "msurr/inference/likelihood.hpp"
#include "msurr/model/simulation.hpp"
#include "msurr/surrogate/model.hpp"

namespace msurr::inference {

/// Log-posterior of θ = logit(Λ₀/500) for a fixed site scenario: the
/// surrogate trajectory at Λ₀, the binomial likelihood of the observations
/// and the log-Jacobian of the transform. Chains may target different
/// observation sets (chain c uses targets[chain_target[c]]), which lets
/// independent replications share one lockstep batch.
class SurrogatePosterior {
 public:
  SurrogatePosterior(const surrogate::SurrogateModel& model, model::ScenarioParams scenario, int years,
                     std::vector<std::vector<BoundObservation>> targets, std::vector<int> chain_target = {},
                     surrogate::Precision precision = surrogate::Precision::Single);

  void operator()(std::span<const double> theta, std::span<double> log_density, std::span<double> gradient);
  BatchLogDensity as_density();

  int years() const { return sensitivity_.years(); }

 private:
  surrogate::EirSensitivity sensitivity_;
  std::vector<std::vector<BoundObservation>> targets_;
  std::vector<int> chain_target_;
  std::vector<double> eir_;
  std::vector<surrogate::Trajectory> d_traj_;
};

struct PosteriorSample {
  int chain = 0;
  int step = 0;  // post-warm-up index
  double eir0 = 0.0;
  double theta = 0.0;
  double log_posterior = 0.0;
  double accept_stat = 0.0;
};

struct PosteriorSummary {
  double mean = 0.0, sd = 0.0;
  double q05 = 0.0, q50 = 0.0, q95 = 0.0;
  Diagnostics diagnostics;  // on Λ₀
  int divergences = 0;
  double mean_accept = 0.0;
  std::vector<double> step_sizes;
};

struct InferenceResult {
  std::vector<std::vector<PosteriorSample>> chains;
  PosteriorSummary summary;
  long gradient_evaluations = 0;
  double seconds = 0.0;
};

/// Uniform draw of Λ₀ on (0, 500), returned as θ.
double draw_prior_theta(Rng& rng);

/// Convert a sampler result to Λ₀ samples and summarize them.
InferenceResult summarize_hmc(const HmcResult& hmc);
PosteriorSummary summarize_samples(const std::vector<std::vector<PosteriorSample>>& chains);

/// Sample Λ₀ given observations of one site scenario (ν per simulated year).
InferenceResult infer_eir(const surrogate::SurrogateModel& model, const model::ScenarioParams& scenario, int years,
                          std::span<const BoundObservation> observations, const HmcConfig& config,
                          surrogate::Precision precision = surrogate::Precision::Single,
                          const std::function<void(int)>& progress = {});

struct ObservedPoint {
  int year = 0;  // calendar year
  int month = 1;
  double day = 0.0;  // mid-month, days since the start of the first simulated year
  double prevalence = 0.0;
  double lower = 0.0, upper = 0.0;  // Wilson 95% interval, n = positive + negative
};

struct PredictiveSeries {
  std::string label;  // "mean", "q05", "q50", "q95"
  double eir0 = 0.0;
  surrogate::Trajectory trajectory;
};

struct PosteriorPredictive {
  int first_year = 0;
  std::vector<PredictiveSeries> series;  // quantile series collapse when Λ₀ values coincide
  std::vector<ObservedPoint> observations;
};

/// Surrogate trajectories at the posterior-mean Λ₀ and at its 5/50/95%
/// sample quantiles, plus the observations with binomial intervals.
PosteriorPredictive posterior_predictive(std::span<const double> eir_samples, const surrogate::SurrogateModel& model,
                                         const model::ScenarioParams& scenario, int years,
                                         std::span<const BoundObservation> observations, int first_year);

/// Wilson score interval for a binomial proportion at 95%.
std::pair<double, double> wilson_interval(double positive, double total);

/// Re-run the simulator calibrated to `eir0` for the same site and years.
model::SimOutput recalibrate_ibm(double eir0, const model::SiteParams& site, const std::vector<double>& nu, int years,
                                 const model::SimConfig& config);

/// Everything worth recording about a run, as a JSON document.
struct ReportContext {
  std::string site;
  std::string model_checksum;
  int first_year = 0;
  int years = 0;
  HmcConfig config;
  std::string precision;
};
std::string inference_report_json(const InferenceResult& result, const PosteriorPredictive& predictive,
                                  const ReportContext& context, const model::SimOutput* ibm = nullptr);

/// Long-format CSV: kind,label,year,day,value,lower,upper.
std::string predictive_csv(const PosteriorPredictive& predictive, const model::SimOutput* ibm = nullptr);

}  // namespace msurr::inference
