#include "msurr/model/immunity.hpp"

#include <cmath>

namespace msurr::model {

double individual_eir(double eir, double zeta, double age_days, const GlobalParams& p) {
  return eir * zeta * age_biting_factor(age_days, p);
}

double infection_probability(double ib, const GlobalParams& p) {
  return p.b0 * (p.b1 + (1.0 - p.b1) / (1.0 + std::pow(ib / p.ib0, p.kb)));
}

double clinical_probability(double ica, double icm, const GlobalParams& p) {
  return p.phi0 * (p.phi1 + (1.0 - p.phi1) / (1.0 + std::pow((ica + icm) / p.ic0, p.kc)));
}

double detection_probability(double id, double age_days, const GlobalParams& p) {
  const double age_modifier = 1.0 - (1.0 - p.fd0) / (1.0 + std::pow(age_days / p.ad, p.gammad));
  return p.d1 + (1.0 - p.d1) / (1.0 + age_modifier * std::pow(id / p.id0, p.kd));
}

ImmunityProbabilities immunity_probabilities(double ib, double ica, double icm, double id,
                                             double age_days, const GlobalParams& p) {
  return {infection_probability(ib, p), clinical_probability(ica, icm, p),
          detection_probability(id, age_days, p)};
}

double asymptomatic_infectivity(double q, const GlobalParams& p) {
  return p.cu + (p.cd - p.cu) * std::pow(q, p.gamma1);
}

}  // namespace msurr::model
