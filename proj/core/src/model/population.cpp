#include "msurr/model/population.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "msurr/error.hpp"
#include "msurr/model/immunity.hpp"
#include "msurr/model/itn.hpp"

namespace msurr::model {
namespace {

constexpr double kImmunityStepDays = 30.0;

double draw_zeta(Rng& rng, const GlobalParams& p) {
  const double sd = std::sqrt(p.sigma2);
  return std::exp(rng.normal(-0.5 * p.sigma2, sd));
}

// Stationary distribution of the per-person state chain at infection hazard
// `hazard` (bites x b) and clinical probability `phi`.
std::array<double, kStates> stationary_states(double hazard, double phi, const GlobalParams& p) {
  using Mat = Eigen::Matrix<double, kStates, kStates>;
  using Vec = Eigen::Matrix<double, kStates, 1>;
  constexpr int S = 0, D = 1, T = 2, A = 3, U = 4;
  Mat q = Mat::Zero();
  const double to_t = hazard * phi * p.f_t;
  const double to_d = hazard * phi * (1.0 - p.f_t);
  const double to_a = hazard * (1.0 - phi);
  q(S, T) = to_t;
  q(S, D) = to_d;
  q(S, A) = to_a;
  q(A, T) = to_t;
  q(A, D) = to_d;
  q(A, U) = 1.0 / p.da;
  q(U, T) = to_t;
  q(U, D) = to_d;
  q(U, A) = to_a;
  q(U, S) = 1.0 / p.du;
  q(D, A) = 1.0 / p.dd;
  q(T, S) = 1.0 / p.dt;
  for (int i = 0; i < kStates; ++i) q(i, i) = -q.row(i).sum();
  Mat system = q.transpose();
  system.row(kStates - 1).setOnes();
  Vec rhs = Vec::Zero();
  rhs(kStates - 1) = 1.0;
  const Vec pi = system.fullPivLu().solve(rhs);
  std::array<double, kStates> out{};
  for (int i = 0; i < kStates; ++i) out[i] = std::max(pi(i), 0.0);
  return out;
}

}  // namespace

Population::Population(std::vector<Individual> people, const SiteParams& site, const GlobalParams& params,
                       std::int64_t day)
    : people_(std::move(people)), site_(site), params_(params), day_(day) {
  if (people_.empty()) throw ConfigError("population must be non-empty");
  latent_days_ = std::max(1, static_cast<int>(std::lround(params_.de)));
  calendar_.resize(static_cast<std::size_t>(latent_days_) + 1);
  decay_b_ = std::exp(-1.0 / params_.rb);
  decay_c_ = std::exp(-1.0 / params_.rc);
  decay_m_ = std::exp(-1.0 / params_.rm);
  decay_d_ = std::exp(-1.0 / params_.rid);
  decay_age_ = std::exp(-1.0 / params_.a0);
  death_prob_ = 1.0 / (site_.mean_age_years * kDaysPerYear);
}

Population Population::naive(std::size_t n, const SiteParams& site, const GlobalParams& params, Rng& rng) {
  if (n == 0) throw ConfigError("population must be non-empty");
  std::vector<Individual> people(n);
  const double mean_age = site.mean_age_years * kDaysPerYear;
  const double death_prob = 1.0 / mean_age;
  for (auto& person : people) {
    person.age = std::floor(rng.exponential(mean_age));
    person.age_decay = std::exp(-person.age / params.a0);
    person.zeta = draw_zeta(rng, params);
    person.death_day = static_cast<std::int64_t>(std::min<std::uint64_t>(rng.geometric(death_prob), 1ULL << 40));
  }
  return Population(std::move(people), site, params);
}

Population Population::at_equilibrium(std::size_t n, const SiteParams& site, const GlobalParams& params,
                                      double eir_daily, Rng& rng) {
  Population pop = naive(n, site, params, rng);
  const GlobalParams& p = params;
  const double full_b = std::exp(-kImmunityStepDays / p.rb);
  const double full_c = std::exp(-kImmunityStepDays / p.rc);
  const double full_d = std::exp(-kImmunityStepDays / p.rid);
  const double half_step_decay = std::exp(-0.5 * kImmunityStepDays / p.a0);
  const double step_decay = std::exp(-kImmunityStepDays / p.a0);

  double ica_sum = 0.0;
  for (auto& person : pop.people_) {
    double ib = 0.0, ica = 0.0, id = 0.0;
    double a = 0.0;
    double mid_decay = half_step_decay;  // exp(-(a + h/2)/a0)
    while (a < person.age) {
      const double h = std::min(kImmunityStepDays, person.age - a);
      const bool full = h == kImmunityStepDays;
      const double md = full ? mid_decay : std::exp(-(a + 0.5 * h) / p.a0);
      const double lam = eir_daily * person.zeta * (1.0 - p.rho * md);
      const double eb = full ? full_b : std::exp(-h / p.rb);
      const double ec = full ? full_c : std::exp(-h / p.rc);
      const double ed = full ? full_d : std::exp(-h / p.rid);
      ib = ib * eb + lam / (1.0 + lam * p.ub) * p.rb * (1.0 - eb);
      const double hazard = infection_probability(ib, p) * lam;
      ica = ica * ec + hazard / (1.0 + hazard * p.uc) * p.rc * (1.0 - ec);
      id = id * ed + hazard / (1.0 + hazard * p.ud) * p.rid * (1.0 - ed);
      a += h;
      mid_decay *= step_decay;
    }
    person.ib = ib;
    person.ica = ica;
    person.id = id;
    ica_sum += ica;
  }
  const double maternal = p.pcm * ica_sum / static_cast<double>(n);
  for (auto& person : pop.people_) {
    person.icm = maternal * std::exp(-person.age / p.rm);
    const double lam = eir_daily * person.zeta * age_biting_factor(person.age, p);
    const double hazard = lam * infection_probability(person.ib, p);
    const auto dist = stationary_states(hazard, clinical_probability(person.ica, person.icm, p), p);
    double u = rng.uniform();
    int state = 0;
    for (; state < kStates - 1; ++state) {
      if (u < dist[state]) break;
      u -= dist[state];
    }
    person.state = static_cast<InfectionState>(state);
  }
  return pop;
}

Individual Population::newborn(Rng& rng, double maternal_immunity) const {
  Individual baby;
  baby.zeta = draw_zeta(rng, params_);
  baby.icm = maternal_immunity;
  baby.death_day = day_ + 1 + static_cast<std::int64_t>(std::min<std::uint64_t>(rng.geometric(death_prob_), 1ULL << 40));
  return baby;
}

bool Population::infect(Individual& person, std::uint32_t bites, Rng& rng) {
  const auto& p = params_;
  const double b = infection_probability(person.ib, p);
  const double p_infect = 1.0 - std::pow(1.0 - b, static_cast<double>(bites));
  if (!rng.bernoulli(p_infect)) return false;
  const double now = static_cast<double>(day_);
  if (now - person.last_boost_c >= p.uc) {
    person.ica += 1.0;
    person.last_boost_c = now;
  }
  if (now - person.last_boost_d >= p.ud) {
    person.id += 1.0;
    person.last_boost_d = now;
  }
  const double phi = clinical_probability(person.ica, person.icm, p);
  if (rng.bernoulli(phi)) {
    person.state = rng.bernoulli(p.f_t) ? InfectionState::T : InfectionState::D;
  } else {
    person.state = InfectionState::A;
  }
  return true;
}

DailySummary Population::step(std::span<const double> eir_per_species, Rng& rng) {
  if (people_.empty()) throw ConfigError("population must be non-empty");
  if (eir_per_species.size() != kSpecies) throw ConfigError("expected one EIR value per species");
  const auto& p = params_;
  const double now = static_cast<double>(day_);
  const double maternal = p.pcm * mean_clinical_immunity();

  std::vector<std::uint8_t> touched(people_.size(), 0);
  auto& due = calendar_[static_cast<std::size_t>(day_ % static_cast<std::int64_t>(calendar_.size()))];
  for (const auto& pending : due) {
    auto& person = people_[pending.index];
    if (person.serial != pending.serial) continue;
    const auto s = person.state;
    if (s == InfectionState::S || s == InfectionState::A || s == InfectionState::U) {
      if (infect(person, pending.bites, rng)) touched[pending.index] = 1;
    }
  }
  due.clear();
  auto& queue = calendar_[static_cast<std::size_t>((day_ + latent_days_) % static_cast<std::int64_t>(calendar_.size()))];

  double total_eir = 0.0;
  for (double e : eir_per_species) total_eir += e;
  const double p_da = 1.0 / p.dd, p_ta = 1.0 / p.dt, p_au = 1.0 / p.da, p_us = 1.0 / p.du;
  const double net_decay_rate = std::log(2.0) / (p.net_half_life_years * kDaysPerYear);

  DailySummary summary;
  double base_sum = 0.0;
  double infectious_sum = 0.0;
  std::array<double, kSpecies> kill_sum{};

  for (std::size_t i = 0; i < people_.size(); ++i) {
    auto& person = people_[i];
    if (!touched[i]) {
      switch (person.state) {
        case InfectionState::D:
          if (rng.bernoulli(p_da)) person.state = InfectionState::A;
          break;
        case InfectionState::T:
          if (rng.bernoulli(p_ta)) person.state = InfectionState::S;
          break;
        case InfectionState::A:
          if (rng.bernoulli(p_au)) person.state = InfectionState::U;
          break;
        case InfectionState::U:
          if (rng.bernoulli(p_us)) person.state = InfectionState::S;
          break;
        case InfectionState::S:
          break;
      }
    }

    const double base = person.zeta * (1.0 - p.rho * person.age_decay);
    double lambda = 0.0;
    if (person.has_net) {
      const double decay = std::exp(-net_decay_rate * person.net_age);
      for (int v = 0; v < kSpecies; ++v) {
        const auto& sp = site_.species[v];
        const double s = 1.0 - (1.0 - sp.s_net) * decay;
        const double r = sp.r_net * decay;
        const NetOutcome net = itn_probabilities(sp.phi_bednet, s, r);
        lambda += eir_per_species[v] * net.w;
        kill_sum[v] += base * (1.0 - net.w - net.z);
      }
      lambda *= base;
    } else {
      lambda = base * total_eir;
    }
    if (lambda > 0.0) {
      const std::uint32_t bites = rng.poisson(lambda);
      if (bites > 0) {
        if (now - person.last_boost_b >= p.ub) {
          person.ib += 1.0;
          person.last_boost_b = now;
        }
        queue.push_back({static_cast<std::uint32_t>(i), person.serial, bites});
      }
    }

    person.ib *= decay_b_;
    person.ica *= decay_c_;
    person.icm *= decay_m_;
    person.id *= decay_d_;

    infectious_sum += base * infectivity(person, p);
    base_sum += base;
    ++summary.counts[static_cast<int>(person.state)];

    person.age += 1.0;
    person.age_decay *= decay_age_;
    if (person.has_net) {
      person.net_age += 1.0;
      if (day_ >= person.net_discard_day) person.has_net = false;
    }
    if (day_ >= person.death_day) {
      const std::uint32_t serial = person.serial + 1;
      person = newborn(rng, maternal);
      person.serial = serial;
    }
  }

  summary.infectivity = base_sum > 0.0 ? infectious_sum / base_sum : 0.0;
  for (int v = 0; v < kSpecies; ++v) summary.net_kill[v] = base_sum > 0.0 ? kill_sum[v] / base_sum : 0.0;
  ++day_;
  return summary;
}

std::size_t Population::apply_itn_round(double coverage, Rng& rng) {
  const double discard = net_discard_probability(params_);
  std::size_t handed_out = 0;
  for (auto& person : people_) {
    if (!rng.bernoulli(coverage)) continue;
    person.has_net = true;
    person.net_age = 0.0;
    person.net_discard_day =
        day_ + static_cast<std::int64_t>(std::min<std::uint64_t>(rng.geometric(discard), 1ULL << 40));
    ++handed_out;
  }
  return handed_out;
}

StateCounts Population::counts() const {
  StateCounts c{};
  for (const auto& person : people_) ++c[static_cast<int>(person.state)];
  return c;
}

double Population::mean_clinical_immunity() const {
  double sum = 0.0;
  for (const auto& person : people_) sum += person.ica;
  return sum / static_cast<double>(people_.size());
}

std::size_t Population::pending_infections() const {
  std::size_t n = 0;
  for (const auto& day : calendar_) n += day.size();
  return n;
}

std::vector<double> biting_propensity(const Population& pop) {
  const auto& p = pop.params();
  std::vector<double> pi;
  pi.reserve(pop.size());
  double total = 0.0;
  for (const auto& person : pop.individuals()) {
    pi.push_back(person.zeta * age_biting_factor(person.age, p));
    total += pi.back();
  }
  for (auto& x : pi) x /= total;
  return pi;
}

std::optional<double> prevalence(const Population& pop, double lower_days, double upper_days) {
  if (!(lower_days >= 0.0 && lower_days < upper_days)) throw ConfigError("prevalence needs 0 <= lower < upper");
  const auto& p = pop.params();
  double detected = 0.0;
  std::size_t in_band = 0;
  for (const auto& person : pop.individuals()) {
    if (!(person.age > lower_days && person.age <= upper_days)) continue;
    ++in_band;
    if (person.state == InfectionState::D) {
      detected += 1.0;
    } else if (person.state == InfectionState::A) {
      detected += detection_probability(person.id, person.age, p);
    }
  }
  if (in_band == 0) return std::nullopt;
  return detected / static_cast<double>(in_band);
}

double infectivity(const Individual& person, const GlobalParams& params) {
  switch (person.state) {
    case InfectionState::D:
      return params.cd;
    case InfectionState::U:
      return params.cu;
    case InfectionState::A:
      return asymptomatic_infectivity(detection_probability(person.id, person.age, params), params);
    case InfectionState::S:
    case InfectionState::T:
      return 0.0;
  }
  return 0.0;
}

std::array<double, kSpecies> foim(const Population& pop, std::span<const double> alpha) {
  if (alpha.size() != kSpecies) throw ConfigError("expected one biting rate per species");
  const auto pi = biting_propensity(pop);
  double sum = 0.0;
  const auto people = pop.individuals();
  for (std::size_t i = 0; i < people.size(); ++i) sum += infectivity(people[i], pop.params()) * pi[i];
  std::array<double, kSpecies> out{};
  for (int v = 0; v < kSpecies; ++v) out[v] = alpha[v] * sum;
  return out;
}

}  // namespace msurr::model
