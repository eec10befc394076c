#include "msurr/inference/posterior.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "msurr/error.hpp"
#include "msurr/io/text.hpp"

namespace msurr::inference {

using surrogate::Trajectory;

SurrogatePosterior::SurrogatePosterior(const surrogate::SurrogateModel& model, model::ScenarioParams scenario,
                                       int years, std::vector<std::vector<BoundObservation>> targets,
                                       std::vector<int> chain_target, surrogate::Precision precision)
    : sensitivity_(model, std::move(scenario), years, precision),
      targets_(std::move(targets)),
      chain_target_(std::move(chain_target)) {
  if (targets_.empty()) throw ConfigError("no observation sets given");
  for (int t : chain_target_) {
    if (t < 0 || static_cast<std::size_t>(t) >= targets_.size()) throw ConfigError("chain target out of range");
  }
  for (const auto& obs : targets_) {
    for (const auto& o : obs) {
      if (o.year < 0 || o.year >= years) throw ConfigError("observation lies outside the simulated years");
    }
  }
}

void SurrogatePosterior::operator()(std::span<const double> theta, std::span<double> log_density,
                                    std::span<double> gradient) {
  const std::size_t n = theta.size();
  if (!chain_target_.empty() && chain_target_.size() != n) {
    throw ConfigError("chain count does not match the chain-to-target map");
  }
  eir_.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    // Keep Λ₀ strictly inside the prior support even where θ saturates.
    eir_[c] = std::clamp(theta_to_eir(theta[c]), 1e-300, std::nextafter(kEirMax, 0.0));
  }
  const auto& traj = sensitivity_.evaluate(eir_);
  d_traj_.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto& obs = targets_[chain_target_.empty() ? 0 : static_cast<std::size_t>(chain_target_[c])];
    log_density[c] = log_likelihood(traj[c], obs, &d_traj_[c]) + log_jacobian(theta[c]);
  }
  const auto d_eir = sensitivity_.eir_gradient(d_traj_);
  for (std::size_t c = 0; c < n; ++c) {
    const double s = theta_to_eir(theta[c]) / kEirMax;
    gradient[c] = d_eir[c] * kEirMax * s * (1.0 - s) + log_jacobian_gradient(theta[c]);
    if (!std::isfinite(log_density[c])) gradient[c] = std::numeric_limits<double>::quiet_NaN();
  }
}

BatchLogDensity SurrogatePosterior::as_density() {
  return [this](std::span<const double> t, std::span<double> l, std::span<double> g) { (*this)(t, l, g); };
}

double draw_prior_theta(Rng& rng) { return eir_to_theta(kEirMax * rng.uniform_open()); }

PosteriorSummary summarize_samples(const std::vector<std::vector<PosteriorSample>>& chains) {
  PosteriorSummary s;
  std::vector<std::vector<double>> values;
  std::vector<double> pooled;
  double accept = 0.0;
  for (const auto& chain : chains) {
    values.emplace_back();
    for (const auto& x : chain) {
      values.back().push_back(x.eir0);
      pooled.push_back(x.eir0);
      accept += x.accept_stat;
    }
  }
  if (pooled.empty()) throw ConfigError("no posterior samples");
  s.mean_accept = accept / static_cast<double>(pooled.size());
  std::sort(pooled.begin(), pooled.end());
  s.q05 = quantile_sorted(pooled, 0.05);
  s.q50 = quantile_sorted(pooled, 0.50);
  s.q95 = quantile_sorted(pooled, 0.95);
  if (pooled.size() >= 2) {
    s.diagnostics = diagnose(values);
    s.mean = s.diagnostics.mean;
    s.sd = s.diagnostics.sd;
  } else {
    s.mean = pooled.front();
  }
  return s;
}

InferenceResult summarize_hmc(const HmcResult& hmc) {
  InferenceResult r;
  r.gradient_evaluations = hmc.gradient_evaluations;
  for (std::size_t c = 0; c < hmc.chains.size(); ++c) {
    auto& out = r.chains.emplace_back();
    const auto& chain = hmc.chains[c];
    for (std::size_t i = 0; i < chain.draws.size(); ++i) {
      const auto& d = chain.draws[i];
      out.push_back({static_cast<int>(c), static_cast<int>(i), theta_to_eir(d.theta), d.theta, d.log_density,
                     d.accept_prob});
    }
  }
  r.summary = summarize_samples(r.chains);
  for (const auto& chain : hmc.chains) {
    r.summary.divergences += chain.divergences;
    r.summary.step_sizes.push_back(chain.step_size);
  }
  return r;
}

InferenceResult infer_eir(const surrogate::SurrogateModel& model, const model::ScenarioParams& scenario, int years,
                          std::span<const BoundObservation> observations, const HmcConfig& config,
                          surrogate::Precision precision, const std::function<void(int)>& progress) {
  if (observations.empty()) throw ConfigError("no observations to fit");
  const auto started = std::chrono::steady_clock::now();
  SurrogatePosterior posterior(model, scenario, years, {{observations.begin(), observations.end()}}, {}, precision);
  const auto hmc = hmc_sample(posterior.as_density(), draw_prior_theta, config, progress);
  auto result = summarize_hmc(hmc);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::pair<double, double> wilson_interval(double positive, double total) {
  if (!(total > 0.0)) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double p = positive / total;
  const double denom = 1.0 + z * z / total;
  const double centre = (p + z * z / (2.0 * total)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / total + z * z / (4.0 * total * total)) / denom;
  return {positive <= 0.0 ? 0.0 : std::max(0.0, centre - half), positive >= total ? 1.0 : std::min(1.0, centre + half)};
}

PosteriorPredictive posterior_predictive(std::span<const double> eir_samples, const surrogate::SurrogateModel& model,
                                         const model::ScenarioParams& scenario, int years,
                                         std::span<const BoundObservation> observations, int first_year) {
  if (eir_samples.empty()) throw ConfigError("no posterior samples");
  std::vector<double> sorted(eir_samples.begin(), eir_samples.end());
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double x : sorted) mean += x;
  mean /= static_cast<double>(sorted.size());

  PosteriorPredictive out;
  out.first_year = first_year;
  const std::pair<const char*, double> wanted[] = {{"mean", mean},
                                                   {"q05", quantile_sorted(sorted, 0.05)},
                                                   {"q50", quantile_sorted(sorted, 0.50)},
                                                   {"q95", quantile_sorted(sorted, 0.95)}};
  std::vector<model::ScenarioParams> batch;
  for (const auto& [label, eir] : wanted) {
    const bool seen = std::any_of(out.series.begin(), out.series.end(),
                                  [&](const PredictiveSeries& s) { return s.eir0 == eir; });
    if (seen) continue;
    out.series.push_back({label, eir, {}});
    batch.push_back(scenario);
    batch.back().eir0 = eir;
  }
  auto trajectories = surrogate::predict_batch(model, batch, years);
  for (std::size_t i = 0; i < out.series.size(); ++i) out.series[i].trajectory = std::move(trajectories[i]);

  for (const auto& o : observations) {
    const auto [first, last] = month_days(o.month);
    const double total = o.positive + o.negative;
    const auto [lo, hi] = wilson_interval(o.positive, total);
    out.observations.push_back({first_year + o.year, o.month, o.year * 365.0 + 0.5 * (first + last),
                                o.positive / total, lo, hi});
  }
  return out;
}

model::SimOutput recalibrate_ibm(double eir0, const model::SiteParams& site, const std::vector<double>& nu, int years,
                                 const model::SimConfig& config) {
  model::SiteParams calibrated = site;
  calibrated.eir0 = eir0;
  return model::run_simulation(calibrated, site.name + "-recalibrated", nu, years, config);
}

namespace {

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

std::string inference_report_json(const InferenceResult& result, const PosteriorPredictive& predictive,
                                  const ReportContext& context, const model::SimOutput* ibm) {
  using nlohmann::json;
  const auto& s = result.summary;
  json j;
  j["site"] = context.site;
  j["model_checksum"] = context.model_checksum;
  j["first_year"] = context.first_year;
  j["years"] = context.years;
  j["precision"] = context.precision;
  j["sampler"] = {{"chains", context.config.chains},
                  {"steps", context.config.steps},
                  {"warmup", context.config.warmup},
                  {"leapfrog", context.config.leapfrog},
                  {"jitter", context.config.jitter},
                  {"target_accept", context.config.target_accept},
                  {"seed", context.config.seed},
                  {"gradient_evaluations", result.gradient_evaluations},
                  {"seconds", result.seconds}};
  j["posterior"] = {{"parameter", "eir0"},
                    {"mean", s.mean},
                    {"sd", s.sd},
                    {"q05", s.q05},
                    {"q50", s.q50},
                    {"q95", s.q95},
                    {"rhat", finite_or_null(s.diagnostics.rhat)},
                    {"ess", finite_or_null(s.diagnostics.ess)},
                    {"draws", s.diagnostics.draws},
                    {"divergences", s.divergences},
                    {"mean_accept", s.mean_accept},
                    {"step_sizes", s.step_sizes}};
  json traces = json::array();
  for (const auto& chain : result.chains) {
    std::vector<double> v;
    v.reserve(chain.size());
    for (const auto& x : chain) v.push_back(x.eir0);
    traces.push_back(v);
  }
  j["traces"] = traces;
  json series = json::array();
  for (const auto& p : predictive.series) {
    std::vector<double> annual;
    for (Eigen::Index y = 0; y < p.trajectory.cols(); ++y) annual.push_back(p.trajectory.col(y).mean());
    series.push_back({{"label", p.label}, {"eir0", p.eir0}, {"annual_mean_prevalence", annual}});
  }
  j["predictive"] = series;
  if (ibm) {
    std::vector<json> annual;
    for (int y = 0; y < ibm->years; ++y) {
      const auto m = ibm->year_mean(y);
      annual.push_back(m ? json(*m) : json(nullptr));
    }
    j["recalibrated_simulation"] = {{"seed", ibm->seed}, {"annual_mean_prevalence", annual}};
  }
  return j.dump(2) + "\n";
}

std::string predictive_csv(const PosteriorPredictive& predictive, const model::SimOutput* ibm) {
  std::ostringstream os;
  os << "kind,label,year,day,value,lower,upper\n";
  for (const auto& s : predictive.series) {
    for (Eigen::Index y = 0; y < s.trajectory.cols(); ++y) {
      for (Eigen::Index d = 0; d < s.trajectory.rows(); ++d) {
        os << "surrogate," << s.label << ',' << predictive.first_year + y << ',' << d + 1 << ','
           << io::format_double(s.trajectory(d, y)) << ",,\n";
      }
    }
  }
  if (ibm) {
    for (int y = 0; y < ibm->years; ++y) {
      for (int d = 0; d < 365; ++d) {
        const double v = ibm->at(y, d);
        os << "simulation,recalibrated," << predictive.first_year + y << ',' << d + 1 << ','
           << (std::isnan(v) ? std::string("NA") : io::format_double(v)) << ",,\n";
      }
    }
  }
  for (const auto& o : predictive.observations) {
    const double day_of_year = o.day - (o.year - predictive.first_year) * 365.0;
    os << "observation," << o.month << ',' << o.year << ',' << io::format_double(day_of_year) << ','
       << io::format_double(o.prevalence) << ',' << io::format_double(o.lower) << ',' << io::format_double(o.upper)
       << '\n';
  }
  return os.str();
}

}  // namespace msurr::inference
