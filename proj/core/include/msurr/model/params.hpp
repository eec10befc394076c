#pragma once

#include <array>
#include <string>
#include <vector>

namespace msurr::model {

inline constexpr int kSpecies = 3;
inline constexpr int kDaysPerYear = 365;

/// Biological parameters shared by every site. Defaults are the median
/// posterior values of the fitted transmission model; durations and decay
/// constants are in days, rates per day.
struct GlobalParams {
  // Human state transitions (mean durations).
  double dd = 5.0;     // D -> A
  double dt = 5.0;     // T -> S
  double da = 200.0;   // A -> U
  double du = 110.0;   // U -> S
  double de = 12.0;    // human latent period, bite -> blood stage
  double delay_gam = 12.5;  // parasite -> infectious gametocyte lag

  // Mosquito development and mortality.
  double del = 6.64;   // early -> late larva
  double dl = 3.72;    // late larva -> pupa
  double dpl = 0.643;  // pupa -> adult
  double mup = 0.249;
  double mum = 0.1253333;
  double me = 0.0338;
  double ml = 0.0348;
  double gamma = 13.25;   // density dependence of late vs early instars
  double dem = 10.0;      // extrinsic incubation (delay tau)
  double beta = 21.2;     // eggs per adult female per day
  double foraging_time = 0.69;

  // Immunity decay time constants.
  double rm = 67.6952;
  double rb = 3650.0;
  double rc = 10950.0;
  double rid = 3650.0;

  // Pre-erythrocytic immunity.
  double b0 = 0.59;
  double b1 = 0.5;
  double ib0 = 43.9;
  double kb = 2.16;

  // Clinical immunity.
  double phi0 = 0.792;
  double phi1 = 0.00074;
  double ic0 = 18.02366;
  double kc = 2.36949;

  // Detection immunity.
  double fd0 = 0.007055;
  double ad = 7993.5;
  double gammad = 4.8183;
  double d1 = 0.160527;
  double id0 = 1.577533;
  double kd = 0.476614;

  // Boost grace periods.
  double ub = 7.2;
  double uc = 6.06;
  double ud = 9.44512;

  // Infectivity towards mosquitoes.
  double cd = 0.068;
  double cu = 0.0062;
  double ct = 0.021896;  // tabulated; treated humans are non-infectious in foim
  double gamma1 = 1.82425;

  // Biting heterogeneity.
  double a0 = 2920.0;
  double rho = 0.85;
  double sigma2 = 1.67;

  double pcm = 0.774368;
  double f_t = 0.5;  // probability a clinical case is treated

  // ITN behaviour.
  double net_half_life_years = 2.64;  // insecticide decay toward an inert net
  double net_retention_years = 5.0;

  // Numerics / toggles.
  bool gametocyte_lag = true;
  int mosquito_substeps = 24;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Per-species vector bionomics and bed-net interaction.
struct SpeciesParams {
  double alpha = 0.3;      // human bites per mosquito per day
  double phi_bednet = 0.85;  // probability of biting while the human is in bed
  double s_net = 0.167;    // probability of feeding successfully on a netted human
  double r_net = 0.30;     // probability of repulsion by a net
};

std::array<SpeciesParams, kSpecies> default_species();

/// Fourier coefficients of the seasonal rainfall profile.
struct RainfallCoefficients {
  double g0 = 1.0;
  std::array<double, 3> g{0.0, 0.0, 0.0};
  std::array<double, 3> h{0.0, 0.0, 0.0};
};

/// Location-specific inputs: seasonality, vector composition, demography,
/// baseline transmission and the yearly ITN usage sequence.
struct SiteParams {
  std::string name;
  RainfallCoefficients rainfall;
  std::array<double, kSpecies> kappa{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double mean_age_years = 18.5;
  double eir0 = 10.0;  // infectious bites per person per year
  std::array<SpeciesParams, kSpecies> species = default_species();
  std::vector<double> itn_usage;  // proportion receiving a net, per year
  int first_usage_year = 0;       // calendar year of itn_usage[0], 0 if unknown

  void validate() const;
};

/// One point of the surrogate's input domain.
struct ScenarioParams {
  std::string id;
  double eir0 = 10.0;
  double mean_age_years = 18.5;
  RainfallCoefficients rainfall;
  std::array<double, kSpecies> kappa{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::vector<double> nu;  // yearly ITN usage

  /// Throws ConfigError unless every input-domain bound holds.
  void validate() const;
};

/// A single bound violation, named by field ("eir0", "kappa[1]", "nu[3]").
struct FieldError {
  std::string field;
  std::string message;
};

/// Every input-domain violation of a scenario (empty when valid).
std::vector<FieldError> scenario_field_errors(const ScenarioParams& scenario);

/// Input-domain bounds for scenarios.
struct ScenarioBounds {
  static constexpr double eir0_min = 0.05;  // open lower bound, floored
  static constexpr double eir0_max = 500.0;
  static constexpr double mean_age_min = 14.8;
  static constexpr double mean_age_max = 55.4;
  static constexpr double fourier_min = -10.0;
  static constexpr double fourier_max = 10.0;
  static constexpr double nu_min = 0.0;
  static constexpr double nu_max = 0.8;
  static constexpr double simplex_tolerance = 1e-6;
};

/// Combine a scenario with species defaults into a full site description.
SiteParams site_from_scenario(const ScenarioParams& scenario,
                              const std::array<SpeciesParams, kSpecies>& species = default_species());

/// Scenario view of a site: the site's usage sequence clamped to the
/// input domain; `warnings` receives one line per clamped year.
ScenarioParams scenario_from_site(const SiteParams& site, std::vector<std::string>* warnings = nullptr);

}  // namespace msurr::model
