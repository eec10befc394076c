#pragma once

#include <cmath>

#include "msurr/model/params.hpp"

namespace msurr::model {

/// Relative biting rate by age, 1 - rho exp(-a/a0).
inline double age_biting_factor(double age_days, const GlobalParams& p) {
  return 1.0 - p.rho * std::exp(-age_days / p.a0);
}

/// EIR experienced by one person: Lambda * zeta * (1 - rho exp(-a/a0)).
double individual_eir(double eir, double zeta, double age_days, const GlobalParams& p);

struct ImmunityProbabilities {
  double b;    // blood-stage infection given an infectious bite
  double phi;  // clinical disease given blood-stage infection
  double q;    // detection by routine diagnostics while asymptomatic
};

double infection_probability(double ib, const GlobalParams& p);
double clinical_probability(double ica, double icm, const GlobalParams& p);

/// q = d1 + (1 - d1) / (1 + f_D(a) (I_D / id0)^kd),
/// f_D(a) = 1 - (1 - fd0) / (1 + (a / ad)^gammad).
double detection_probability(double id, double age_days, const GlobalParams& p);

ImmunityProbabilities immunity_probabilities(double ib, double ica, double icm, double id,
                                             double age_days, const GlobalParams& p);

/// Infectivity of an asymptomatic human with detection probability q:
/// cu + (cd - cu) q^gamma1, so q = 1 gives cd and q -> 0 gives cu.
double asymptomatic_infectivity(double q, const GlobalParams& p);

}  // namespace msurr::model
