#include "msurr/model/params.hpp"

#include <cmath>
#include <sstream>

#include "msurr/error.hpp"

namespace msurr::model {
namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << name << " must be positive and finite (got " << value << ")";
    throw ConfigError(os.str());
  }
}

void require_probability(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    std::ostringstream os;
    os << name << " must lie in [0, 1] (got " << value << ")";
    throw ConfigError(os.str());
  }
}

void require_range(double value, double lo, double hi, const std::string& name) {
  if (!(value >= lo && value <= hi)) {
    std::ostringstream os;
    os << name << " must lie in [" << lo << ", " << hi << "] (got " << value << ")";
    throw ConfigError(os.str());
  }
}

void validate_kappa(const std::array<double, kSpecies>& kappa) {
  double sum = 0.0;
  for (int v = 0; v < kSpecies; ++v) {
    if (!(kappa[v] >= 0.0)) {
      throw ConfigError("kappa[" + std::to_string(v) + "] must be non-negative");
    }
    sum += kappa[v];
  }
  if (std::fabs(sum - 1.0) > ScenarioBounds::simplex_tolerance) {
    std::ostringstream os;
    os << "kappa must sum to 1 (sum " << sum << ")";
    throw ConfigError(os.str());
  }
}

void validate_rainfall(const RainfallCoefficients& r) {
  using B = ScenarioBounds;
  require_range(r.g0, B::fourier_min, B::fourier_max, "g0");
  for (int i = 0; i < 3; ++i) {
    require_range(r.g[i], B::fourier_min, B::fourier_max, "g" + std::to_string(i + 1));
    require_range(r.h[i], B::fourier_min, B::fourier_max, "h" + std::to_string(i + 1));
  }
}

}  // namespace

void GlobalParams::validate() const {
#define MSURR_POSITIVE(field) require_positive(field, #field)
  MSURR_POSITIVE(dd);
  MSURR_POSITIVE(dt);
  MSURR_POSITIVE(da);
  MSURR_POSITIVE(du);
  MSURR_POSITIVE(de);
  MSURR_POSITIVE(delay_gam);
  MSURR_POSITIVE(del);
  MSURR_POSITIVE(dl);
  MSURR_POSITIVE(dpl);
  MSURR_POSITIVE(mup);
  MSURR_POSITIVE(mum);
  MSURR_POSITIVE(me);
  MSURR_POSITIVE(ml);
  MSURR_POSITIVE(gamma);
  MSURR_POSITIVE(dem);
  MSURR_POSITIVE(beta);
  MSURR_POSITIVE(foraging_time);
  MSURR_POSITIVE(rm);
  MSURR_POSITIVE(rb);
  MSURR_POSITIVE(rc);
  MSURR_POSITIVE(rid);
  MSURR_POSITIVE(ib0);
  MSURR_POSITIVE(kb);
  MSURR_POSITIVE(ic0);
  MSURR_POSITIVE(kc);
  MSURR_POSITIVE(ad);
  MSURR_POSITIVE(gammad);
  MSURR_POSITIVE(id0);
  MSURR_POSITIVE(kd);
  MSURR_POSITIVE(ub);
  MSURR_POSITIVE(uc);
  MSURR_POSITIVE(ud);
  MSURR_POSITIVE(gamma1);
  MSURR_POSITIVE(a0);
  MSURR_POSITIVE(sigma2);
  MSURR_POSITIVE(net_half_life_years);
  MSURR_POSITIVE(net_retention_years);
#undef MSURR_POSITIVE
#define MSURR_PROBABILITY(field) require_probability(field, #field)
  MSURR_PROBABILITY(b0);
  MSURR_PROBABILITY(b1);
  MSURR_PROBABILITY(phi0);
  MSURR_PROBABILITY(phi1);
  MSURR_PROBABILITY(d1);
  MSURR_PROBABILITY(fd0);
  MSURR_PROBABILITY(rho);
  MSURR_PROBABILITY(pcm);
  MSURR_PROBABILITY(cd);
  MSURR_PROBABILITY(cu);
  MSURR_PROBABILITY(ct);
  MSURR_PROBABILITY(f_t);
#undef MSURR_PROBABILITY
  if (mosquito_substeps < 1) throw ConfigError("mosquito_substeps must be >= 1");
}

std::array<SpeciesParams, kSpecies> default_species() {
  // gambiae, arabiensis, funestus. Biting rate = human blood index / 3-day
  // gonotrophic cycle; bed-net values for a standard pyrethroid net. These
  // are documented assumptions and can be overridden per site.
  return {SpeciesParams{0.92 / 3.0, 0.85, 0.167, 0.30},
          SpeciesParams{0.71 / 3.0, 0.80, 0.167, 0.30},
          SpeciesParams{0.94 / 3.0, 0.90, 0.167, 0.30}};
}

void SiteParams::validate() const {
  using B = ScenarioBounds;
  validate_rainfall(rainfall);
  validate_kappa(kappa);
  require_range(mean_age_years, B::mean_age_min, B::mean_age_max, "mean_age");
  if (!(eir0 > 0.0 && eir0 <= B::eir0_max)) {
    throw ConfigError("eir0 must lie in (0, 500]");
  }
  for (int v = 0; v < kSpecies; ++v) {
    const auto& s = species[v];
    const std::string tag = "species" + std::to_string(v + 1) + ".";
    require_positive(s.alpha, (tag + "alpha").c_str());
    require_probability(s.phi_bednet, (tag + "phi_bednet").c_str());
    require_probability(s.s_net, (tag + "s_net").c_str());
    require_probability(s.r_net, (tag + "r_net").c_str());
    if (s.s_net + s.r_net > 1.0 + 1e-12) {
      throw ConfigError(tag + "s_net + r_net must not exceed 1");
    }
  }
  for (std::size_t t = 0; t < itn_usage.size(); ++t) {
    require_range(itn_usage[t], 0.0, 1.0, "itn_usage[" + std::to_string(t) + "]");
  }
}

std::vector<FieldError> scenario_field_errors(const ScenarioParams& scenario) {
  using B = ScenarioBounds;
  std::vector<FieldError> errors;
  auto range = [&](double value, double lo, double hi, std::string field) {
    if (!(value >= lo && value <= hi)) {
      std::ostringstream os;
      os << "must lie in [" << lo << ", " << hi << "] (got " << value << ")";
      errors.push_back({std::move(field), os.str()});
    }
  };
  if (!(scenario.eir0 > 0.0 && scenario.eir0 <= B::eir0_max)) {
    std::ostringstream os;
    os << "must lie in (0, " << B::eir0_max << "] (got " << scenario.eir0 << ")";
    errors.push_back({"eir0", os.str()});
  }
  range(scenario.mean_age_years, B::mean_age_min, B::mean_age_max, "mean_age_years");
  const auto& r = scenario.rainfall;
  range(r.g0, B::fourier_min, B::fourier_max, "g0");
  for (int i = 0; i < 3; ++i) {
    range(r.g[i], B::fourier_min, B::fourier_max, "g" + std::to_string(i + 1));
    range(r.h[i], B::fourier_min, B::fourier_max, "h" + std::to_string(i + 1));
  }
  double sum = 0.0;
  bool kappa_ok = true;
  for (int v = 0; v < kSpecies; ++v) {
    if (!(scenario.kappa[v] >= 0.0 && scenario.kappa[v] <= 1.0)) {
      errors.push_back({"kappa[" + std::to_string(v) + "]", "must lie in [0, 1]"});
      kappa_ok = false;
    }
    sum += scenario.kappa[v];
  }
  if (kappa_ok && std::fabs(sum - 1.0) > B::simplex_tolerance) {
    std::ostringstream os;
    os << "must sum to 1 (sum " << sum << ")";
    errors.push_back({"kappa", os.str()});
  }
  for (std::size_t t = 0; t < scenario.nu.size(); ++t) {
    range(scenario.nu[t], B::nu_min, B::nu_max, "nu[" + std::to_string(t) + "]");
  }
  return errors;
}

void ScenarioParams::validate() const {
  const auto errors = scenario_field_errors(*this);
  if (!errors.empty()) throw ConfigError(errors.front().field + " " + errors.front().message);
}

SiteParams site_from_scenario(const ScenarioParams& scenario,
                              const std::array<SpeciesParams, kSpecies>& species) {
  SiteParams site;
  site.name = scenario.id;
  site.rainfall = scenario.rainfall;
  site.kappa = scenario.kappa;
  site.mean_age_years = scenario.mean_age_years;
  site.eir0 = scenario.eir0;
  site.species = species;
  site.itn_usage = scenario.nu;
  return site;
}

ScenarioParams scenario_from_site(const SiteParams& site, std::vector<std::string>* warnings) {
  ScenarioParams s;
  s.id = site.name;
  s.eir0 = site.eir0;
  s.mean_age_years = site.mean_age_years;
  s.rainfall = site.rainfall;
  s.kappa = site.kappa;
  s.nu.reserve(site.itn_usage.size());
  for (std::size_t t = 0; t < site.itn_usage.size(); ++t) {
    double v = site.itn_usage[t];
    if (v > ScenarioBounds::nu_max) {
      if (warnings) {
        std::ostringstream os;
        os << "ITN usage " << v << " at index " << t << " clamped to " << ScenarioBounds::nu_max;
        warnings->push_back(os.str());
      }
      v = ScenarioBounds::nu_max;
    }
    s.nu.push_back(v);
  }
  return s;
}

}  // namespace msurr::model
