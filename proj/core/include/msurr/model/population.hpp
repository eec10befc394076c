#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msurr/model/params.hpp"
#include "msurr/rng.hpp"

namespace msurr::model {

enum class InfectionState : std::uint8_t { S = 0, D = 1, T = 2, A = 3, U = 4 };

inline constexpr int kStates = 5;

struct Individual {
  InfectionState state = InfectionState::S;
  double age = 0.0;   // days
  double zeta = 1.0;  // biting heterogeneity
  double ib = 0.0;    // pre-erythrocytic immunity
  double ica = 0.0;   // acquired clinical immunity
  double icm = 0.0;   // maternal clinical immunity
  double id = 0.0;    // detection immunity
  double last_boost_b = -1e300;
  double last_boost_c = -1e300;
  double last_boost_d = -1e300;
  bool has_net = false;
  double net_age = 0.0;
  std::int64_t net_discard_day = 0;
  std::int64_t death_day = 0;
  std::uint32_t serial = 0;  // bumped on replacement; invalidates pending infections
  double age_decay = 1.0;    // cached exp(-age / a0)
};

using StateCounts = std::array<std::size_t, kStates>;

/// Population-level quantities gathered during one daily step.
struct DailySummary {
  double infectivity = 0.0;  // sum_i c_i pi_i (state after the step)
  std::array<double, kSpecies> net_kill{};  // sum over netted i of pi_i (1 - w - z)
  StateCounts counts{};
};

/// A pending blood-stage challenge: bites received `latent` days ago.
struct PendingInfection {
  std::uint32_t index;
  std::uint32_t serial;
  std::uint32_t bites;
};

/// Fixed-size human roster. Deaths are replaced immediately by newborns so
/// the size never changes. Pending infections (bites waiting out the human
/// latent period) live in a calendar queue keyed by day, tagged with the
/// individual's serial so that replaced individuals drop their queue.
class Population {
 public:
  Population(std::vector<Individual> people, const SiteParams& site, const GlobalParams& params,
             std::int64_t day = 0);

  /// Roster drawn at a transmission equilibrium for daily EIR `eir_daily`:
  /// exponential ages, log-normal heterogeneity, immunity integrated over
  /// each person's lifetime of expected exposure, and infection states from
  /// the per-person stationary distribution of the state chain.
  static Population at_equilibrium(std::size_t n, const SiteParams& site, const GlobalParams& params,
                                   double eir_daily, Rng& rng);

  /// Immunologically naive, all-susceptible roster.
  static Population naive(std::size_t n, const SiteParams& site, const GlobalParams& params, Rng& rng);

  std::span<const Individual> individuals() const { return people_; }
  std::span<Individual> individuals() { return people_; }
  std::size_t size() const { return people_.size(); }
  std::int64_t day() const { return day_; }
  const GlobalParams& params() const { return params_; }

  /// Advance one day under per-species daily EIR (infectious bites per person
  /// per day).
  DailySummary step(std::span<const double> eir_per_species, Rng& rng);

  /// Each person independently receives a fresh net with probability
  /// `coverage`; returns the number of nets handed out.
  std::size_t apply_itn_round(double coverage, Rng& rng);

  StateCounts counts() const;
  double mean_clinical_immunity() const;
  std::size_t pending_infections() const;

 private:
  Individual newborn(Rng& rng, double maternal_immunity) const;
  bool infect(Individual& person, std::uint32_t bites, Rng& rng);

  std::vector<Individual> people_;
  SiteParams site_;
  GlobalParams params_;
  std::int64_t day_;
  int latent_days_;
  std::vector<std::vector<PendingInfection>> calendar_;
  // Daily factors derived from params.
  double decay_b_, decay_c_, decay_m_, decay_d_, decay_age_;
  double death_prob_;
};

/// Biting propensities pi_i = zeta_i psi(a_i) / sum_j zeta_j psi(a_j).
std::vector<double> biting_propensity(const Population& pop);

/// Diagnostic prevalence among ages in (lower, upper] days: D counts 1, A
/// counts its detection probability q, everything else 0. Returns nullopt
/// when nobody is in the band.
std::optional<double> prevalence(const Population& pop, double lower_days, double upper_days);

/// Infectivity of one person towards mosquitoes (0 for S and T).
double infectivity(const Individual& person, const GlobalParams& params);

/// Force of infection on mosquitoes, alpha^v sum_i c_i pi_i, from the
/// roster's current states (no gametocyte lag).
std::array<double, kSpecies> foim(const Population& pop, std::span<const double> alpha);

/// Age band used for the surrogate's output: 5 to 59 months.
inline constexpr double kBandLowerDays = 5.0 * 365.0 / 12.0;
inline constexpr double kBandUpperDays = 59.0 * 365.0 / 12.0;

}  // namespace msurr::model
