#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "msurr/error.hpp"
#include "msurr/model/immunity.hpp"
#include "msurr/model/itn.hpp"
#include "msurr/model/mosquito.hpp"
#include "msurr/model/population.hpp"
#include "msurr/model/rainfall.hpp"
#include "msurr/model/simulation.hpp"

using namespace msurr;
using namespace msurr::model;

namespace {

RainfallCoefficients kolda_rain() {
  RainfallCoefficients c;
  c.g0 = 2.574537504;
  c.g = {3.489987862, 0.657536368, 0.565366933};
  c.h = {-2.39714463, 2.189027167, -0.565822876};
  return c;
}

SiteParams test_site(double eir0 = 10.0) {
  SiteParams s;
  s.name = "test";
  s.rainfall = kolda_rain();
  s.kappa = {0.25, 0.25, 0.5};
  s.mean_age_years = 18.5;
  s.eir0 = eir0;
  return s;
}

Individual person_at(InfectionState state, double age_days) {
  Individual p;
  p.state = state;
  p.age = age_days;
  p.age_decay = std::exp(-age_days / GlobalParams{}.a0);
  p.death_day = 1LL << 40;
  return p;
}

}  // namespace

TEST_SUITE("rainfall") {
  TEST_CASE("constant term only") {
    RainfallCoefficients c;
    c.g0 = 1.0;
    for (double t : {0.0, 0.1, 0.5, 0.99}) CHECK(rainfall(c, t) == 1.0);
  }

  TEST_CASE("Kolda profile at t=0 is the sum of cosine coefficients") {
    CHECK(rainfall(kolda_rain(), 0.0) == doctest::Approx(7.287428667).epsilon(1e-12));
  }

  TEST_CASE("cosine symmetry") {
    RainfallCoefficients c;
    c.g0 = 0.0;
    c.g = {1.0, 0.0, 0.0};
    for (double t : {0.1, 0.2, 0.37}) CHECK(rainfall(c, t) == doctest::Approx(rainfall(c, 1.0 - t)).epsilon(1e-14));
  }

  TEST_CASE("period one") {
    const auto c = kolda_rain();
    for (int k = 0; k < 1024; k += 7) {
      const double t = k / 1024.0;  // t + 1 is exact in binary
      CHECK(rainfall(c, t) == rainfall(c, t + 1.0));
    }
  }

  TEST_CASE("clamped at zero") {
    RainfallCoefficients c;
    c.g0 = 0.0;
    c.g = {1.0, 0.0, 0.0};
    CHECK(rainfall(c, 0.5) == 0.0);
  }

  TEST_CASE("carrying capacity") {
    RainfallCoefficients flat;
    flat.g0 = 3.0;
    CarryingCapacity k_flat(flat);
    CHECK(k_flat(1000.0, 0.3) == doctest::Approx(1000.0));

    const auto c = kolda_rain();
    CarryingCapacity k(c);
    // Find a day with R(t) = 2 Rbar approximately is awkward; linearity in K0 instead.
    CHECK(k(2000.0, 0.2) == doctest::Approx(2.0 * k(1000.0, 0.2)));

    // Fine trapezoid oracle for the annual mean of K.
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += k(1e5, static_cast<double>(i) / n);
    CHECK(sum / n == doctest::Approx(1e5).epsilon(1e-3));

    RainfallCoefficients dry;
    dry.g0 = -1.0;
    CHECK_THROWS_WITH_AS(CarryingCapacity{dry}, "non-positive mean rainfall", ConfigError);
  }

  TEST_CASE("carrying capacity floor") {
    RainfallCoefficients c;
    c.g0 = 0.5;
    c.g = {1.0, 0.0, 0.0};  // dips negative around mid-year
    CarryingCapacity k(c);
    CHECK(k(1000.0, 0.5) == doctest::Approx(1000.0 * CarryingCapacity::kFloorFraction));
  }
}

TEST_SUITE("immunity") {
  const GlobalParams p;

  TEST_CASE("individual EIR") {
    CHECK(individual_eir(2.0, 1.5, 0.0, p) == doctest::Approx(2.0 * 1.5 * 0.15));
    CHECK(individual_eir(2.0, 1.5, 1e9, p) == doctest::Approx(3.0));
    const double oracle = (10.0 / 365.0) * (1.0 - 0.85 * std::exp(-1.0));
    CHECK(individual_eir(10.0 / 365.0, 1.0, 2920.0, p) == doctest::Approx(oracle).epsilon(1e-14));
    double prev = -1.0;
    for (double a = 0.0; a < 40000.0; a += 500.0) {
      const double v = individual_eir(1.0, 1.0, a, p);
      CHECK(v > prev);
      prev = v;
    }
  }

  TEST_CASE("zero immunity") {
    const auto r = immunity_probabilities(0.0, 0.0, 0.0, 0.0, 1000.0, p);
    CHECK(r.b == doctest::Approx(0.59));
    CHECK(r.phi == doctest::Approx(0.792));
    CHECK(r.q == doctest::Approx(1.0));
  }

  TEST_CASE("saturated pre-erythrocytic immunity") {
    CHECK(infection_probability(1e12, p) == doctest::Approx(0.295).epsilon(1e-9));
  }

  TEST_CASE("detection at id0 and ad") {
    const double fd = 1.0 - (1.0 - 0.007055) / 2.0;
    const double oracle = 0.160527 + (1.0 - 0.160527) / (1.0 + fd);
    CHECK(detection_probability(p.id0, p.ad, p) == doctest::Approx(oracle).epsilon(1e-12));
  }

  TEST_CASE("monotone non-increasing in immunity") {
    double b = 2.0, phi = 2.0, q = 2.0;
    for (double x = 0.0; x < 500.0; x += 3.7) {
      const auto r = immunity_probabilities(x, x, 0.0, x, 5000.0, p);
      CHECK(r.b <= b);
      CHECK(r.phi <= phi);
      CHECK(r.q <= q);
      CHECK(r.b > 0.0);
      CHECK(r.phi > 0.0);
      CHECK(r.q > 0.0);
      b = r.b;
      phi = r.phi;
      q = r.q;
    }
  }

  TEST_CASE("asymptomatic infectivity endpoints") {
    CHECK(asymptomatic_infectivity(1.0, p) == doctest::Approx(p.cd));
    CHECK(asymptomatic_infectivity(0.0, p) == doctest::Approx(p.cu));
    const double mid = asymptomatic_infectivity(0.5, p);
    CHECK(mid > p.cu);
    CHECK(mid < p.cd);
  }
}

TEST_SUITE("itn") {
  TEST_CASE("net outcomes") {
    auto inert = itn_probabilities(0.7, 1.0, 0.0);
    CHECK(inert.w == doctest::Approx(1.0));
    CHECK(inert.z == doctest::Approx(0.0));
    auto outside = itn_probabilities(0.0, 0.3, 0.5);
    CHECK(outside.w == doctest::Approx(1.0));
    CHECK(outside.z == doctest::Approx(0.0));
    auto r = itn_probabilities(0.9, 0.3, 0.5);
    CHECK(r.w == doctest::Approx(0.37));
    CHECK(r.z == doctest::Approx(0.45));
  }

  TEST_CASE("insecticide decay halves at the half-life") {
    GlobalParams p;
    SpeciesParams sp;
    const auto fresh = aged_net_outcome(sp, 0.0, p);
    const auto fresh_oracle = itn_probabilities(sp.phi_bednet, sp.s_net, sp.r_net);
    CHECK(fresh.w == doctest::Approx(fresh_oracle.w));
    const auto half = aged_net_outcome(sp, p.net_half_life_years * 365.0, p);
    const auto half_oracle = itn_probabilities(sp.phi_bednet, 1.0 - 0.5 * (1.0 - sp.s_net), 0.5 * sp.r_net);
    CHECK(half.w == doctest::Approx(half_oracle.w));
    CHECK(half.z == doctest::Approx(half_oracle.z));
  }
}

TEST_SUITE("population") {
  TEST_CASE("rejects an empty roster") {
    CHECK_THROWS_WITH_AS(Population({}, test_site(), GlobalParams{}), "population must be non-empty", ConfigError);
  }

  TEST_CASE("no transmission keeps everyone susceptible and immunity decays") {
    std::vector<Individual> people(200, person_at(InfectionState::S, 3000.0));
    for (auto& p : people) p.ib = p.ica = p.id = 5.0;
    Population pop(people, test_site(), GlobalParams{});
    Rng rng(1);
    const std::array<double, kSpecies> zero{};
    for (int d = 0; d < 30; ++d) pop.step(zero, rng);
    for (const auto& p : pop.individuals()) {
      CHECK(p.state == InfectionState::S);
      CHECK(p.ib < 5.0);
      CHECK(p.ica < 5.0);
      CHECK(p.id < 5.0);
    }
    CHECK(pop.individuals()[0].ib == doctest::Approx(5.0 * std::exp(-30.0 / GlobalParams{}.rb)));
  }

  TEST_CASE("clinical recovery rate") {
    const int n = 20000;
    std::vector<Individual> people(n, person_at(InfectionState::D, 3000.0));
    Population pop(people, test_site(), GlobalParams{});
    Rng rng(7);
    const std::array<double, kSpecies> zero{};
    pop.step(zero, rng);
    const double moved = static_cast<double>(pop.counts()[static_cast<int>(InfectionState::A)]) / n;
    const double sd = std::sqrt(0.2 * 0.8 / n);
    CHECK(std::fabs(moved - 0.2) < 4.0 * sd);
  }

  TEST_CASE("forced infection chain ends in treatment") {
    GlobalParams p;
    p.f_t = 1.0;
    p.b0 = p.b1 = 1.0;
    p.phi0 = p.phi1 = 1.0;
    const int n = 300;
    std::vector<Individual> people(n, person_at(InfectionState::S, 5000.0));
    Population pop(people, test_site(), p);
    Rng rng(3);
    const std::array<double, kSpecies> heavy{50.0, 0.0, 0.0};
    const std::array<double, kSpecies> zero{};
    pop.step(heavy, rng);
    CHECK(pop.pending_infections() == n);
    for (int d = 1; d < static_cast<int>(std::lround(p.de)); ++d) pop.step(zero, rng);
    CHECK(pop.counts()[static_cast<int>(InfectionState::S)] == n);
    pop.step(zero, rng);
    CHECK(pop.counts()[static_cast<int>(InfectionState::T)] == n);
  }

  TEST_CASE("counts always sum to N and size is fixed") {
    const SiteParams site = test_site(50.0);
    Rng rng(11);
    auto pop = Population::at_equilibrium(500, site, GlobalParams{}, 50.0 / 365.0, rng);
    const std::array<double, kSpecies> eir{0.05, 0.05, 0.05};
    for (int d = 0; d < 400; ++d) {
      const auto s = pop.step(eir, rng);
      std::size_t total = 0;
      for (auto c : s.counts) total += c;
      CHECK(total == 500);
    }
    CHECK(pop.size() == 500);
  }

  TEST_CASE("infection clears after ten subpatent durations without transmission") {
    GlobalParams p;
    const SiteParams site = test_site(100.0);
    Rng rng(5);
    auto pop = Population::at_equilibrium(400, site, p, 100.0 / 365.0, rng);
    CHECK(pop.counts()[0] < 400);
    const std::array<double, kSpecies> zero{};
    // A -> U -> S is the slowest route out; 10 (da + du) days leaves each person
    // infected with probability ~2e-7.
    for (int d = 0; d < static_cast<int>(10 * (p.da + p.du)); ++d) pop.step(zero, rng);
    CHECK(pop.counts()[static_cast<int>(InfectionState::S)] == 400);
  }

  TEST_CASE("net distribution") {
    Rng rng(21);
    std::vector<Individual> people(1000, person_at(InfectionState::S, 4000.0));
    Population pop(people, test_site(), GlobalParams{});
    const auto given = pop.apply_itn_round(0.8, rng);
    CHECK(std::fabs(static_cast<double>(given) - 800.0) < 4.0 * std::sqrt(1000 * 0.8 * 0.2));
    CHECK(pop.apply_itn_round(0.0, rng) == 0);
  }

  TEST_CASE("net retention median is ln2 times the mean") {
    GlobalParams p;
    Rng rng(4);
    const int n = 20000;
    std::vector<Individual> people(n, person_at(InfectionState::S, 4000.0));
    Population pop(people, test_site(), p);
    pop.apply_itn_round(1.0, rng);
    const double median_days = 5.0 * 365.0 * std::numbers::ln2;
    int kept = 0;
    for (const auto& person : pop.individuals()) kept += person.net_discard_day >= median_days;
    CHECK(static_cast<double>(kept) / n == doctest::Approx(0.5).epsilon(0.04));
  }
}

TEST_SUITE("prevalence") {
  TEST_CASE("all susceptible and all clinical") {
    std::vector<Individual> people(10, person_at(InfectionState::S, 400.0));
    Population s(people, test_site(), GlobalParams{});
    CHECK(*prevalence(s, kBandLowerDays, kBandUpperDays) == 0.0);
    for (auto& p : people) p.state = InfectionState::D;
    Population d(people, test_site(), GlobalParams{});
    CHECK(*prevalence(d, kBandLowerDays, kBandUpperDays) == 1.0);
  }

  TEST_CASE("asymptomatic counts with its detection probability") {
    GlobalParams g;
    const double age = 400.0;
    const double f_d = 1.0 - (1.0 - g.fd0) / (1.0 + std::pow(age / g.ad, g.gammad));
    const double id = g.id0 * std::pow(((1.0 - g.d1) / (0.4 - g.d1) - 1.0) / f_d, 1.0 / g.kd);
    auto a = person_at(InfectionState::A, age);
    a.id = id;
    Population pop({person_at(InfectionState::D, age), a, person_at(InfectionState::S, age)}, test_site(), g);
    CHECK(*prevalence(pop, kBandLowerDays, kBandUpperDays) == doctest::Approx(1.4 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("empty band is missing, bad band throws") {
    Population pop({person_at(InfectionState::D, 10000.0)}, test_site(), GlobalParams{});
    CHECK_FALSE(prevalence(pop, kBandLowerDays, kBandUpperDays).has_value());
    CHECK_THROWS_AS(prevalence(pop, 10.0, 5.0), ConfigError);
  }

  TEST_CASE("band is half-open") {
    Population lower({person_at(InfectionState::D, kBandLowerDays)}, test_site(), GlobalParams{});
    CHECK_FALSE(prevalence(lower, kBandLowerDays, kBandUpperDays).has_value());
    Population upper({person_at(InfectionState::D, kBandUpperDays)}, test_site(), GlobalParams{});
    CHECK(prevalence(upper, kBandLowerDays, kBandUpperDays).has_value());
  }
}

TEST_SUITE("foim") {
  const std::array<double, kSpecies> alpha{0.3, 0.2, 0.1};

  TEST_CASE("all susceptible") {
    std::vector<Individual> people(5, person_at(InfectionState::S, 1000.0));
    Population pop(people, test_site(), GlobalParams{});
    for (double x : foim(pop, alpha)) CHECK(x == 0.0);
  }

  TEST_CASE("single clinical case") {
    Population pop({person_at(InfectionState::D, 1000.0)}, test_site(), GlobalParams{});
    const auto f = foim(pop, alpha);
    CHECK(f[0] == doctest::Approx(0.3 * 0.068));
    CHECK(f[2] == doctest::Approx(0.1 * 0.068));
  }

  TEST_CASE("treated humans do not infect mosquitoes") {
    Population pop({person_at(InfectionState::T, 1000.0)}, test_site(), GlobalParams{});
    CHECK(foim(pop, alpha)[0] == 0.0);
  }

  TEST_CASE("propensities sum to one") {
    Rng rng(2);
    auto pop = Population::naive(300, test_site(), GlobalParams{}, rng);
    const auto pi = biting_propensity(pop);
    double sum = 0.0;
    for (double x : pi) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_SUITE("mosquito") {
  // Right-hand sides of the continuous larval equations.
  struct Rhs {
    double e, l, p, m;
  };
  Rhs larval_rhs(const SpeciesCompartments& s, double k, const GlobalParams& g) {
    const double adults = s.adults();
    return {g.beta * adults - s.E / g.del - g.me * s.E * (1.0 + (s.E + s.L) / k),
            s.E / g.del - s.L / g.dl - g.ml * s.L * (1.0 + g.gamma * (s.E + s.L) / k),
            s.L / g.dl - s.P / g.dpl - g.mup * s.P, s.P / (2.0 * g.dpl) - g.mum * adults};
  }

  TEST_CASE("larval equilibrium solves the continuous equations") {
    GlobalParams g;
    const auto eq = larval_equilibrium(g);
    const auto r = larval_rhs(eq, 1.0, g);
    CHECK(std::fabs(r.e) < 1e-9 * g.beta * eq.adults());
    CHECK(std::fabs(r.l) < 1e-9 * eq.E / g.del);
    CHECK(std::fabs(r.p) < 1e-9 * eq.L / g.dl);
    CHECK(std::fabs(r.m) < 1e-9 * eq.P / g.dpl);
    CHECK(eq.E > 0.0);
    CHECK(eq.Sm > 0.0);
  }

  TEST_CASE("no infection drains Em and Im") {
    GlobalParams g;
    const std::array<double, kSpecies> k0{1e4, 1e4, 1e4};
    const std::array<double, kSpecies> lam{0.02, 0.02, 0.02};
    MosquitoModel mos(k0, lam, g);
    CHECK(mos.species(0).Im > 0.0);
    CarryingCapacity cap(kolda_rain());
    const std::array<double, kSpecies> zero{};
    for (int d = 0; d < 365; ++d) mos.step_day(zero, cap, d % 365, zero);
    CHECK(mos.species(0).Em < 1e-12 * mos.species(0).adults());
    CHECK(mos.species(0).Im < 1e-4 * mos.species(0).adults());
    CHECK(mos.clamp_events() == 0);
  }

  TEST_CASE("one day agrees with a fine RK4 integration of the continuous equations") {
    GlobalParams g;
    g.mosquito_substeps = 6400;
    const std::array<double, kSpecies> k0{1e4, 0.0, 0.0};
    const std::array<double, kSpecies> zero{};
    MosquitoModel mos(k0, zero, g);
    mos.species(0).P *= 1.5;
    mos.species(0).E *= 0.7;
    RainfallCoefficients flat;
    CarryingCapacity cap(flat);
    SpeciesCompartments y = mos.species(0);
    mos.step_day(zero, cap, 0, zero);

    // Reference: lumped adults M, no infection, K = k0.
    auto f = [&](const SpeciesCompartments& s) {
      const auto r = larval_rhs(s, k0[0], g);
      SpeciesCompartments d;
      d.E = r.e;
      d.L = r.l;
      d.P = r.p;
      d.Sm = r.m;
      return d;
    };
    auto axpy = [](SpeciesCompartments a, const SpeciesCompartments& d, double h) {
      a.E += h * d.E;
      a.L += h * d.L;
      a.P += h * d.P;
      a.Sm += h * d.Sm;
      return a;
    };
    const int n = 10000;
    const double h = 1.0 / n;
    const double start_adults = y.adults();
    y.Sm = start_adults;
    y.Em = y.Im = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto k1 = f(y);
      const auto k2 = f(axpy(y, k1, h / 2));
      const auto k3 = f(axpy(y, k2, h / 2));
      const auto k4 = f(axpy(y, k3, h));
      y.E += h / 6 * (k1.E + 2 * k2.E + 2 * k3.E + k4.E);
      y.L += h / 6 * (k1.L + 2 * k2.L + 2 * k3.L + k4.L);
      y.P += h / 6 * (k1.P + 2 * k2.P + 2 * k3.P + k4.P);
      y.Sm += h / 6 * (k1.Sm + 2 * k2.Sm + 2 * k3.Sm + k4.Sm);
    }
    const auto& got = mos.species(0);
    CHECK(got.adults() - start_adults == doctest::Approx(y.Sm - start_adults).epsilon(1e-2));
    CHECK(got.P == doctest::Approx(y.P).epsilon(1e-3));
    CHECK(got.L == doctest::Approx(y.L).epsilon(1e-3));
    CHECK(got.E == doctest::Approx(y.E).epsilon(1e-3));
  }

  TEST_CASE("delayed flux equals discounted inflow") {
    GlobalParams g;
    const std::array<double, kSpecies> k0{2e4, 1e4, 3e4};
    const std::array<double, kSpecies> lam0{0.01, 0.01, 0.01};
    MosquitoModel mos(k0, lam0, g);
    RainfallCoefficients flat;
    CarryingCapacity cap(flat);
    const std::array<double, kSpecies> zero{};
    const int tau = static_cast<int>(g.dem);
    std::vector<std::array<double, kSpecies>> infected;
    double worst = 0.0;
    for (int d = 0; d < 120; ++d) {
      const double x = 0.01 * (1.0 + 0.8 * std::sin(d / 5.0));
      const std::array<double, kSpecies> lam{x, 0.5 * x, 2.0 * x};
      mos.step_day(lam, cap, d, zero);
      infected.push_back({mos.infected_last_day(0), mos.infected_last_day(1), mos.infected_last_day(2)});
      if (d >= tau) {
        for (int v = 0; v < kSpecies; ++v) {
          const double expected = infected[d - tau][v] * std::exp(-g.mum * g.dem);
          worst = std::max(worst, std::fabs(mos.matured_last_day(v) - expected) / expected);
        }
      }
    }
    CHECK(worst < 1e-8);
  }

  TEST_CASE("species without capacity stay empty") {
    GlobalParams g;
    const std::array<double, kSpecies> k0{1e4, 0.0, 0.0};
    const std::array<double, kSpecies> lam{0.01, 0.01, 0.01};
    MosquitoModel mos(k0, lam, g);
    CarryingCapacity cap(kolda_rain());
    const std::array<double, kSpecies> zero{};
    for (int d = 0; d < 50; ++d) mos.step_day(lam, cap, d, zero);
    CHECK(mos.species(1).adults() == 0.0);
    CHECK(mos.species(0).adults() > 0.0);
  }

  TEST_CASE("invalid carrying capacity") {
    GlobalParams g;
    const std::array<double, kSpecies> bad{-1.0, 1.0, 1.0};
    const std::array<double, kSpecies> zero{};
    CHECK_THROWS_WITH_AS(MosquitoModel(bad, zero, g), "degenerate carrying capacity", ConfigError);
  }

  TEST_CASE("EIR from infectious mosquitoes") {
    GlobalParams g;
    const std::array<double, kSpecies> k0{1.0, 0.0, 0.0};
    const std::array<double, kSpecies> zero{};
    MosquitoModel mos(k0, zero, g);
    mos.species(0).Im = 100.0;
    const std::array<double, kSpecies> alpha{0.3, 0.2, 0.1};
    CHECK(eir_from_mosquitoes(mos, alpha, 1000) == doctest::Approx(0.03));
    mos.species(0).Im = 200.0;
    CHECK(eir_from_mosquitoes(mos, alpha, 1000) == doctest::Approx(0.06));
    mos.species(0).Im = 0.0;
    CHECK(eir_from_mosquitoes(mos, alpha, 1000) == 0.0);
    CHECK_THROWS_AS(eir_from_mosquitoes(mos, alpha, 0), ConfigError);
  }

  TEST_CASE("non-negative through a seasonal dry spell with nets") {
    GlobalParams g;
    RainfallCoefficients harsh;
    harsh.g0 = 1.0;
    harsh.g = {2.5, 0.0, 0.0};  // zero rainfall for a third of the year
    CarryingCapacity cap(harsh);
    const std::array<double, kSpecies> k0{1e5, 1e5, 1e5};
    const std::array<double, kSpecies> lam{0.05, 0.05, 0.05};
    const std::array<double, kSpecies> extra{0.5, 0.5, 0.5};
    MosquitoModel mos(k0, lam, g);
    for (int d = 0; d < 730; ++d) {
      mos.step_day(lam, cap, d % 365, extra);
      for (int v = 0; v < kSpecies; ++v) {
        const auto& s = mos.species(v);
        for (double x : {s.E, s.L, s.P, s.Sm, s.Em, s.Im}) CHECK(x >= 0.0);
      }
    }
    CHECK(mos.clamp_events() == 0);
  }
}

TEST_SUITE("simulation") {
  SimConfig small_config(std::uint64_t seed = 3) {
    SimConfig c;
    c.population = 300;
    c.warmup_years = 1;
    c.seed = seed;
    return c;
  }

  ScenarioParams scenario(double eir0, double nu) {
    ScenarioParams s;
    s.id = "s";
    s.eir0 = eir0;
    s.rainfall = kolda_rain();
    s.kappa = {0.25, 0.25, 0.5};
    s.nu = {nu};
    return s;
  }

  TEST_CASE("calibration reaches the target") {
    auto site = test_site(20.0);
    const auto cfg = small_config();
    const auto r = calibrate_k0(site, cfg);
    CHECK(std::fabs(r.achieved_eir / 20.0 - 1.0) <= 0.02);
    for (int v = 0; v < kSpecies; ++v) CHECK(r.k0[v] == doctest::Approx(r.scale * site.kappa[v] * 300));
  }

  TEST_CASE("single species composition") {
    auto site = test_site(10.0);
    site.kappa = {1.0, 0.0, 0.0};
    const auto r = calibrate_k0(site, small_config());
    CHECK(r.k0[0] > 0.0);
    CHECK(r.k0[1] == 0.0);
    CHECK(r.k0[2] == 0.0);
  }

  TEST_CASE("calibrated scale grows with the target") {
    double prev = 0.0;
    for (double eir : {1.0, 10.0, 100.0}) {
      const auto r = calibrate_k0(test_site(eir), small_config());
      CHECK(r.scale >= prev);
      prev = r.scale;
    }
  }

  TEST_CASE("uninfectious humans make any target unattainable") {
    auto cfg = small_config();
    cfg.population = 100;
    cfg.params.cd = cfg.params.cu = 0.0;
    CHECK_THROWS_WITH_AS(calibrate_k0(test_site(10.0), cfg), "EIR target unattainable", DomainError);
  }

  TEST_CASE("identical seeds give identical output") {
    const auto s = scenario(15.0, 0.3);
    const auto a = run_simulation(s, 2, small_config(9));
    const auto b = run_simulation(s, 2, small_config(9));
    REQUIRE(a.prevalence.size() == 2 * 365);
    CHECK(std::equal(a.prevalence.begin(), a.prevalence.end(), b.prevalence.begin(),
                     [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; }));
    for (double x : a.prevalence) {
      if (!std::isnan(x)) CHECK((x >= 0.0 && x <= 1.0));
    }
  }

  TEST_CASE("negligible transmission gives negligible prevalence") {
    const auto out = run_simulation(scenario(0.05, 0.0), 1, small_config());
    CHECK(out.year_mean(0).value_or(0.0) < 0.02);
  }

  TEST_CASE("nets lower prevalence") {
    SimConfig cfg = small_config(17);
    cfg.population = 1000;
    const auto without = run_simulation(scenario(30.0, 0.0), 3, cfg);
    const auto with = run_simulation(scenario(30.0, 0.8), 3, cfg);
    CHECK(*with.year_mean(2) < *without.year_mean(2));
  }

  TEST_CASE("rejects bad arguments") {
    CHECK_THROWS_AS(run_simulation(scenario(10.0, 0.0), 0, small_config()), ConfigError);
    CHECK_THROWS_AS(run_simulation(scenario(10.0, 0.9), 1, small_config()), ConfigError);
  }
}
