#include "msurr/model/mosquito.hpp"

#include <algorithm>
#include <cmath>

#include "msurr/error.hpp"

namespace msurr::model {
namespace {

// Relative size of a negative excursion treated as rounding noise rather than
// a clamp event.
constexpr double kRoundingSlack = 1e-9;

double clamp_nonnegative(double value, double scale, std::uint64_t& events) {
  if (value >= 0.0) return value;
  if (value < -kRoundingSlack * std::max(scale, 1.0)) ++events;
  return 0.0;
}

}  // namespace

SpeciesCompartments larval_equilibrium(const GlobalParams& p) {
  const double mu = p.mum;
  // Adults per late larva at equilibrium: M = L c.
  const double c = 1.0 / (p.dl * (1.0 / p.dpl + p.mup) * 2.0 * p.dpl * mu);
  auto early_for = [&](double y) {
    // me x^2 + (1/del + me + me y) x - beta c y = 0, positive root.
    const double qa = p.me;
    const double qb = 1.0 / p.del + p.me + p.me * y;
    const double qc = -p.beta * c * y;
    return (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
  };
  auto residual = [&](double y) {
    const double x = early_for(y);
    return x / p.del - y * (1.0 / p.dl + p.ml * (1.0 + p.gamma * (x + y)));
  };
  double lo = 1e-12, hi = 1.0;
  if (!(residual(lo) > 0.0)) throw ConfigError("mosquito parameters do not sustain a population");
  while (residual(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e12) throw ConfigError("no larval equilibrium found");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > 0.0 ? lo : hi) = mid;
  }
  const double y = 0.5 * (lo + hi);
  SpeciesCompartments eq;
  eq.E = early_for(y);
  eq.L = y;
  eq.P = (y / p.dl) / (1.0 / p.dpl + p.mup);
  eq.Sm = eq.P / (2.0 * p.dpl * mu);
  return eq;
}

MosquitoModel::MosquitoModel(std::span<const double> k0, std::span<const double> foim, const GlobalParams& p)
    : params_(p) {
  if (k0.size() != kSpecies || foim.size() != kSpecies) throw ConfigError("expected one value per species");
  h_ = 1.0 / p.mosquito_substeps;
  slots_ = std::max(1, static_cast<int>(std::lround(p.dem / h_)));
  const SpeciesCompartments unit = larval_equilibrium(p);
  const double mu = p.mum;
  const double decay = std::exp(-mu * h_);
  double in_em = 0.0;  // sum_j decay^j, j < slots
  for (int j = 0; j < slots_; ++j) in_em += std::pow(decay, j);
  const double matured_factor = std::pow(decay, slots_);
  const double in_im = matured_factor / (1.0 - decay);

  for (int v = 0; v < kSpecies; ++v) {
    if (!(k0[v] >= 0.0)) throw ConfigError("degenerate carrying capacity");
    k0_[v] = k0[v];
    auto& s = state_[v];
    s.E = unit.E * k0[v];
    s.L = unit.L * k0[v];
    s.P = unit.P * k0[v];
    const double adults = unit.Sm * k0[v];
    const double lam = std::max(foim[v], 0.0);
    const double rate = lam + mu;
    const double per_sm = lam * (1.0 - std::exp(-rate * h_)) / rate;  // deposit per unit Sm
    s.Sm = adults / (1.0 + per_sm * (in_em + in_im));
    const double deposit = per_sm * s.Sm;
    s.Em = deposit * in_em;
    s.Im = deposit * in_im;
    delay_[v].resize(static_cast<std::size_t>(slots_));
    for (int i = 0; i < slots_; ++i) {
      delay_[v][static_cast<std::size_t>(i)] = {deposit, -mu * h_ * (slots_ - 1 - i)};
    }
  }
}

void MosquitoModel::step_day(std::span<const double> foim, const CarryingCapacity& capacity, int day_of_year,
                             std::span<const double> extra_mortality) {
  if (foim.size() != kSpecies || extra_mortality.size() != kSpecies) {
    throw ConfigError("expected one value per species");
  }
  const auto& p = params_;
  const int substeps = p.mosquito_substeps;
  const double r_pupa = 1.0 / p.dpl + p.mup;
  const double pupa_loss = 1.0 - std::exp(-r_pupa * h_);
  infected_day_.fill(0.0);
  matured_day_.fill(0.0);

  for (int j = 0; j < substeps; ++j) {
    const double t = (day_of_year + j * h_) / kDaysPerYear;
    for (int v = 0; v < kSpecies; ++v) {
      auto& s = state_[v];
      auto& entry = delay_[v][cursor_];
      if (k0_[v] == 0.0) {
        entry = {0.0, cumulative_mortality_[v]};
        continue;
      }
      const double k = capacity(k0_[v], t);
      if (!(k > 0.0)) throw DomainError("degenerate carrying capacity");
      const double mu = p.mum + extra_mortality[v];
      const double lam = std::max(foim[v], 0.0);
      const double adults = s.adults();
      const double density = (s.E + s.L) / k;

      const double r_early = 1.0 / p.del + p.me * (1.0 + density);
      const double early_lost = s.E * (1.0 - std::exp(-r_early * h_));
      const double early_dev = early_lost * (1.0 / p.del) / r_early;

      const double r_late = 1.0 / p.dl + p.ml * (1.0 + p.gamma * density);
      const double late_lost = s.L * (1.0 - std::exp(-r_late * h_));
      const double late_dev = late_lost * (1.0 / p.dl) / r_late;

      const double pupa_lost = s.P * pupa_loss;
      const double emerged = 0.5 * pupa_lost * (1.0 / p.dpl) / r_pupa;

      const double r_sus = lam + mu;
      const double sus_lost = s.Sm * (1.0 - std::exp(-r_sus * h_));
      const double infected = r_sus > 0.0 ? sus_lost * lam / r_sus : 0.0;

      const double decay = std::exp(-mu * h_);
      cumulative_mortality_[v] += mu * h_;
      const double matured = entry.deposit * std::exp(-(cumulative_mortality_[v] - entry.cumulative_mortality));
      entry = {infected, cumulative_mortality_[v]};

      s.E = s.E - early_lost + p.beta * adults * h_;
      s.L = s.L - late_lost + early_dev;
      s.P = s.P - pupa_lost + late_dev;
      s.Sm = s.Sm - sus_lost + emerged;
      const double em = s.Em * decay + infected - matured;
      s.Em = clamp_nonnegative(em, s.Em + infected, clamp_events_);
      s.Im = s.Im * decay + matured;
      s.E = clamp_nonnegative(s.E, s.E + early_lost, clamp_events_);
      s.L = clamp_nonnegative(s.L, s.L + late_lost, clamp_events_);
      s.P = clamp_nonnegative(s.P, s.P + pupa_lost, clamp_events_);
      s.Sm = clamp_nonnegative(s.Sm, s.Sm + sus_lost, clamp_events_);

      infected_day_[v] += infected;
      matured_day_[v] += matured;
    }
    cursor_ = (cursor_ + 1) % static_cast<std::size_t>(slots_);
  }
}

std::array<double, kSpecies> eir_by_species(const MosquitoModel& mosquitoes, std::span<const double> alpha,
                                            std::size_t humans) {
  if (humans == 0) throw ConfigError("population must be non-empty");
  if (alpha.size() != kSpecies) throw ConfigError("expected one biting rate per species");
  std::array<double, kSpecies> out{};
  for (int v = 0; v < kSpecies; ++v) out[v] = alpha[v] * mosquitoes.species(v).Im / static_cast<double>(humans);
  return out;
}

double eir_from_mosquitoes(const MosquitoModel& mosquitoes, std::span<const double> alpha, std::size_t humans) {
  double total = 0.0;
  for (double e : eir_by_species(mosquitoes, alpha, humans)) total += e;
  return total;
}

}  // namespace msurr::model
