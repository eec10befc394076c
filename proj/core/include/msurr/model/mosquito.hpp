#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "msurr/model/params.hpp"
#include "msurr/model/rainfall.hpp"

namespace msurr::model {

/// Compartments of one mosquito species (continuous counts).
struct SpeciesCompartments {
  double E = 0.0;   // early larvae
  double L = 0.0;   // late larvae
  double P = 0.0;   // pupae
  double Sm = 0.0;  // susceptible adult females
  double Em = 0.0;  // incubating
  double Im = 0.0;  // infectious

  double adults() const { return Sm + Em + Im; }
};

/// Larval-stage equilibrium per unit carrying capacity (K = 1) in the
/// absence of infection. Scales linearly with K.
SpeciesCompartments larval_equilibrium(const GlobalParams& p);

/// Delay-differential mosquito model for all species.
///
/// Integration uses `mosquito_substeps` substeps per day. Each substep moves
/// mass between compartments with exact exponential loss fractions at the
/// substep's frozen rates (so compartments stay non-negative for any step),
/// and explicit egg laying. The incubation delay is a ring buffer of the mass
/// each substep moved from Sm to Em together with the cumulative adult
/// mortality; the cohort leaving Em after tau is its deposit times
/// exp(-integral of mortality over the window), which is exp(-mu tau) at
/// constant mortality.
class MosquitoModel {
 public:
  /// Start at the larval equilibrium for carrying capacity `k0` with adults
  /// split according to a constant initial force of infection `foim`.
  MosquitoModel(std::span<const double> k0, std::span<const double> foim, const GlobalParams& p);

  /// Advance one day. `foim` and `extra_mortality` are per species and held
  /// constant over the day; `day_of_year` selects K(t).
  void step_day(std::span<const double> foim, const CarryingCapacity& capacity, int day_of_year,
                std::span<const double> extra_mortality);

  const SpeciesCompartments& species(int v) const { return state_[v]; }
  SpeciesCompartments& species(int v) { return state_[v]; }
  double k0(int v) const { return k0_[v]; }

  /// Mass moved Sm -> Em and Em -> Im during the most recent day.
  double infected_last_day(int v) const { return infected_day_[v]; }
  double matured_last_day(int v) const { return matured_day_[v]; }

  /// Negative excursions beyond rounding that had to be clamped to zero.
  std::uint64_t clamp_events() const { return clamp_events_; }

  int delay_slots() const { return slots_; }

 private:
  struct DelayEntry {
    double deposit = 0.0;
    double cumulative_mortality = 0.0;
  };

  GlobalParams params_;
  std::array<double, kSpecies> k0_{};
  std::array<SpeciesCompartments, kSpecies> state_{};
  std::array<std::vector<DelayEntry>, kSpecies> delay_;
  std::array<double, kSpecies> cumulative_mortality_{};
  std::array<double, kSpecies> infected_day_{};
  std::array<double, kSpecies> matured_day_{};
  std::size_t cursor_ = 0;
  int slots_ = 0;
  double h_ = 1.0;
  std::uint64_t clamp_events_ = 0;
};

/// Daily EIR per species, alpha^v Im^v / N.
std::array<double, kSpecies> eir_by_species(const MosquitoModel& mosquitoes, std::span<const double> alpha,
                                            std::size_t humans);

/// Total daily EIR, sum over species.
double eir_from_mosquitoes(const MosquitoModel& mosquitoes, std::span<const double> alpha, std::size_t humans);

}  // namespace msurr::model
