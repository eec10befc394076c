#pragma once

#include "msurr/model/params.hpp"

namespace msurr::model {

/// Feeding-without-death (w) and repulsion (z) probabilities for a mosquito
/// meeting a netted human.
struct NetOutcome {
  double w;
  double z;
};

/// w = 1 - phi_B + phi_B s_N, z = phi_B r_N.
NetOutcome itn_probabilities(double phi_bednet, double s_net, double r_net);

/// Outcome for a net of the given age: insecticide decays exponentially with
/// half-life `net_half_life_years`, moving s_N toward 1 and r_N toward 0.
NetOutcome aged_net_outcome(const SpeciesParams& species, double net_age_days, const GlobalParams& p);

/// Daily probability that a household discards its net.
inline double net_discard_probability(const GlobalParams& p) {
  return 1.0 / (p.net_retention_years * kDaysPerYear);
}

}  // namespace msurr::model
