#include "msurr/model/itn.hpp"

#include <cmath>
#include <numbers>

namespace msurr::model {

NetOutcome itn_probabilities(double phi_bednet, double s_net, double r_net) {
  return {1.0 - phi_bednet + phi_bednet * s_net, phi_bednet * r_net};
}

NetOutcome aged_net_outcome(const SpeciesParams& species, double net_age_days, const GlobalParams& p) {
  const double decay = std::exp(-std::numbers::ln2 * net_age_days / (p.net_half_life_years * kDaysPerYear));
  const double s = 1.0 - (1.0 - species.s_net) * decay;
  const double r = species.r_net * decay;
  return itn_probabilities(species.phi_bednet, s, r);
}

}  // namespace msurr::model
