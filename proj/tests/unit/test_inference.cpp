#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "json.hpp"
#include "msurr/error.hpp"
#include "msurr/inference/posterior.hpp"
#include "msurr/io/observations.hpp"
#include "msurr/sampling/sampling.hpp"

namespace fs = std::filesystem;
using namespace msurr;
using namespace msurr::inference;
using surrogate::Trajectory;

namespace {

io::ObservationSet kolda_obs() { return io::load_observations(fs::path(MSURR_DATA_DIR) / "observations/kolda_dhs.csv"); }

BatchLogDensity gaussian(double mean, double sd) {
  return [=](std::span<const double> x, std::span<double> lp, std::span<double> g) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = (x[i] - mean) / sd;
      lp[i] = -0.5 * z * z;
      g[i] = -z / sd;
    }
  };
}

surrogate::SurrogateModel small_model(std::uint64_t seed) {
  surrogate::SurrogateModel m;
  m.features.rainfall_resolution = 8;
  std::vector<Eigen::MatrixXd> raw;
  for (const auto& s : sampling::sample_scenarios(12, 4, seed)) raw.push_back(featurize(s, 4, m.features));
  m.standardizer = surrogate::Standardizer::fit(raw);
  m.network = surrogate::Network::initialized({m.features.dim(), 6, 5, 365, surrogate::CellType::Lstm}, seed);
  Rng rng(seed);
  auto& p = m.network.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += rng.normal(0.0, 0.3);
  return m;
}

model::ScenarioParams midpoint(int years) { return sampling::transform_margins(std::vector<double>(12 + years, 0.5), years); }

std::vector<double> pooled_theta(const HmcResult& r) {
  std::vector<double> out;
  for (const auto& c : r.chains)
    for (const auto& d : c.draws) out.push_back(d.theta);
  return out;
}

}  // namespace

TEST_CASE("monthly prevalence: month boundaries and slice means") {
  CHECK(month_days(1) == std::pair{0, 31});
  CHECK(month_days(2) == std::pair{31, 59});
  CHECK(month_days(12) == std::pair{334, 365});
  CHECK_THROWS_AS(month_days(0), ConfigError);
  CHECK_THROWS_AS(month_days(13), ConfigError);

  CHECK(monthly_prevalence(Trajectory::Constant(365, 2, 0.3), 1, 7) == doctest::Approx(0.3));
  Trajectory t(365, 1);
  for (int d = 0; d < 365; ++d) t(d, 0) = d + 1.0;
  CHECK(monthly_prevalence(t, 0, 1) == doctest::Approx(16.0));  // mean of days 1..31
  CHECK(monthly_prevalence(t, 0, 2) == doctest::Approx(45.5));  // days 32..59
  CHECK(monthly_prevalence(t, 0, 12) == doctest::Approx(350.0));  // days 335..365
  CHECK_THROWS_AS(monthly_prevalence(t, 1, 1), ConfigError);
}

TEST_CASE("likelihood: closed forms and gradient") {
  const std::vector<BoundObservation> one{{0, 3, 0.0, 1.0}};
  CHECK(log_likelihood(Trajectory::Constant(365, 1, 0.5), one) == doctest::Approx(std::log(0.5)));

  const auto obs = kolda_obs();
  const auto bound = bind_observations(obs, 2000, 18);
  REQUIRE(bound.size() == 37);
  double total = 0.0;
  for (const auto& r : obs.records) total += r.positive + r.negative;
  CHECK(log_likelihood(Trajectory::Constant(365, 18, 0.5), bound) == doctest::Approx(total * std::log(0.5)));
  CHECK_THROWS_AS(bind_observations(obs, 2009, 18), ConfigError);
  CHECK_THROWS_AS(bind_observations(obs, 2000, 8), ConfigError);

  // Zero-prevalence months stay finite thanks to the clamp.
  const double at_zero = log_likelihood(Trajectory::Zero(365, 18), bound);
  CHECK(std::isfinite(at_zero));

  Rng rng(3);
  Trajectory t(365, 18);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = 0.05 + 0.4 * rng.uniform();
  Trajectory g;
  log_likelihood(t, bound, &g);
  for (auto [day, year] : {std::pair{5, 8}, std::pair{320, 17}, std::pair{200, 14}}) {
    Trajectory u = t;
    u(day, year) += 1e-6;
    const double up = log_likelihood(u, bound);
    u(day, year) -= 2e-6;
    const double down = log_likelihood(u, bound);
    CHECK(g(day, year) == doctest::Approx((up - down) / 2e-6).epsilon(1e-5));
  }
  CHECK(g.col(0).isZero(0.0));  // no observations in 2000
}

TEST_CASE("prior transform: midpoint, round trip, Jacobian") {
  CHECK(eir_to_theta(250.0) == 0.0);
  CHECK(log_jacobian(0.0) == doctest::Approx(std::log(500.0 * 0.25)));
  for (double e = 0.01; e < 500.0; e *= 1.7) CHECK(std::fabs(theta_to_eir(eir_to_theta(e)) - e) < 1e-10);
  CHECK_THROWS_AS(eir_to_theta(0.0), DomainError);
  CHECK_THROWS_AS(eir_to_theta(500.0), DomainError);
  for (double th : {-30.0, -2.0, 0.3, 4.0, 40.0}) {
    const double h = 1e-6;
    CHECK(log_jacobian_gradient(th) ==
          doctest::Approx((log_jacobian(th + h) - log_jacobian(th - h)) / (2 * h)).epsilon(1e-6));
    const double fd = (theta_to_eir(th + h) - theta_to_eir(th - h)) / (2 * h);
    if (std::fabs(th) < 10) CHECK(log_jacobian(th) == doctest::Approx(std::log(fd)).epsilon(1e-6));
  }
}

TEST_CASE("posterior gradient matches finite differences over Λ₀") {
  const auto m = small_model(9);
  const auto s = midpoint(4);
  std::vector<BoundObservation> obs;
  for (int y = 1; y < 4; ++y)
    for (int mo = 1; mo <= 12; mo += 2) obs.push_back({y, mo, 150.0, 40.0 + mo});
  SurrogatePosterior post(m, s, 4, {obs}, {}, surrogate::Precision::Double);
  Rng rng(1);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double th = eir_to_theta(1.0 + 480.0 * rng.uniform());
    double lp, g, up, down, dummy;
    const double h = 1e-5;
    post(std::span<const double>(&th, 1), std::span<double>(&lp, 1), std::span<double>(&g, 1));
    const double a = th + h, b = th - h;
    post(std::span<const double>(&a, 1), std::span<double>(&up, 1), std::span<double>(&dummy, 1));
    post(std::span<const double>(&b, 1), std::span<double>(&down, 1), std::span<double>(&dummy, 1));
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::fabs(g - fd) / std::max({std::fabs(g), std::fabs(fd), 1e-3}));
  }
  CHECK(worst < 1e-3);

  // The single-precision path agrees closely.
  SurrogatePosterior fast(m, s, 4, {obs}, {}, surrogate::Precision::Single);
  const std::vector<double> th{-1.0, 0.0, 2.0};
  std::vector<double> l1(3), g1(3), l2(3), g2(3);
  post(th, l1, g1);
  fast(th, l2, g2);
  for (int i = 0; i < 3; ++i) {
    CHECK(l2[i] == doctest::Approx(l1[i]).epsilon(1e-4));
    CHECK(g2[i] == doctest::Approx(g1[i]).epsilon(1e-2));
  }
}

TEST_CASE("leapfrog: second-order energy error on a quadratic potential") {
  const auto f = gaussian(0.0, 1.0);
  auto energy_error = [&](double eps) {
    double th = 1.0, p = 0.5, lp = -0.5, g = -1.0;
    const double h0 = 0.5 * th * th + 0.5 * p * p;
    const double e[1] = {eps};
    // Same trajectory length for both step sizes.
    leapfrog(f, std::span<double>(&th, 1), std::span<double>(&p, 1), std::span<double>(&lp, 1),
             std::span<double>(&g, 1), e, static_cast<int>(std::lround(1.6 / eps)));
    return std::fabs(-lp + 0.5 * p * p - h0);
  };
  const double coarse = energy_error(0.2), fine = energy_error(0.1);
  CHECK(coarse > 0.0);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("HMC: standard normal moments, split-R̂, determinism") {
  HmcConfig c;
  c.chains = 10;
  c.steps = 2000;
  c.warmup = 1000;
  c.seed = 7;
  const auto init = [](Rng& r) { return r.normal(0.0, 3.0); };
  const auto r = hmc_sample(gaussian(0.0, 1.0), init, c);
  REQUIRE(r.chains.size() == 10);
  std::vector<std::vector<double>> chains;
  for (const auto& ch : r.chains) {
    REQUIRE(ch.draws.size() == 1000);
    chains.emplace_back();
    for (const auto& d : ch.draws) chains.back().push_back(d.theta);
    CHECK(ch.step_size > 0.0);
  }
  const auto d = diagnose(chains);
  CHECK(std::fabs(d.mean) < 0.05);
  CHECK(d.sd * d.sd > 0.9);
  CHECK(d.sd * d.sd < 1.1);
  CHECK(d.rhat_defined);
  CHECK(d.rhat < 1.01);
  CHECK(pooled_theta(hmc_sample(gaussian(0.0, 1.0), init, c)) == pooled_theta(r));
  c.seed = 8;
  CHECK(pooled_theta(hmc_sample(gaussian(0.0, 1.0), init, c)) != pooled_theta(r));
}

TEST_CASE("HMC: uniform prior through the logit transform") {
  HmcConfig c;
  c.chains = 10;
  c.steps = 1500;
  c.warmup = 500;
  c.seed = 3;
  const BatchLogDensity prior_only = [](std::span<const double> th, std::span<double> lp, std::span<double> g) {
    for (std::size_t i = 0; i < th.size(); ++i) {
      lp[i] = log_jacobian(th[i]);
      g[i] = log_jacobian_gradient(th[i]);
    }
  };
  const auto r = hmc_sample(prior_only, draw_prior_theta, c);
  std::vector<double> u;
  for (const auto& ch : r.chains)
    for (const auto& d : ch.draws) u.push_back(theta_to_eir(d.theta) / kEirMax);
  REQUIRE(u.size() == 10000);
  std::sort(u.begin(), u.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double n = static_cast<double>(u.size());
    ks = std::max({ks, std::fabs(u[i] - i / n), std::fabs((i + 1) / n - u[i])});
  }
  MESSAGE("KS statistic against U(0,1): " << ks);
  CHECK(ks < 0.05);
}

TEST_CASE("HMC: initialization retries and failure") {
  HmcConfig c;
  c.chains = 3;
  c.steps = 20;
  c.warmup = 10;
  // Only the right half-line is allowed.
  const BatchLogDensity half = [](std::span<const double> x, std::span<double> lp, std::span<double> g) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      lp[i] = x[i] > 0.0 ? -0.5 * x[i] * x[i] : -std::numeric_limits<double>::infinity();
      g[i] = -x[i];
    }
  };
  const auto r = hmc_sample(half, [](Rng& rng) { return rng.normal(); }, c);
  for (const auto& ch : r.chains)
    for (const auto& d : ch.draws) CHECK(d.theta > 0.0);
  const BatchLogDensity nowhere = [](std::span<const double>, std::span<double> lp, std::span<double> g) {
    std::fill(lp.begin(), lp.end(), std::nan(""));
    std::fill(g.begin(), g.end(), 0.0);
  };
  CHECK_THROWS_AS(hmc_sample(nowhere, [](Rng& rng) { return rng.normal(); }, c), DomainError);
  c.warmup = 20;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("diagnostics: constant chains, independent draws, repeated draws") {
  const auto flat = diagnose({{1, 1, 1, 1}, {1, 1, 1, 1}});
  CHECK_FALSE(flat.rhat_defined);
  CHECK(std::isnan(flat.rhat));
  CHECK(std::isnan(flat.ess));

  Rng rng(12);
  std::vector<std::vector<double>> iid(4, std::vector<double>(2000));
  for (auto& c : iid)
    for (auto& x : c) x = rng.normal();
  const auto d = diagnose(iid);
  CHECK(d.rhat < 1.01);
  CHECK(d.ess == doctest::Approx(8000.0).epsilon(0.15));

  // Every draw repeated once (lag-1 autocorrelation 1/2): ESS halves.
  std::vector<std::vector<double>> doubled;
  for (const auto& c : iid) {
    doubled.emplace_back();
    for (std::size_t i = 0; i < c.size() / 2; ++i) {
      doubled.back().push_back(c[i]);
      doubled.back().push_back(c[i]);
    }
  }
  const auto h = diagnose(doubled);
  CHECK(h.ess == doctest::Approx(8000.0 / 2).epsilon(0.15));

  const auto single = diagnose({iid[0]});
  CHECK_FALSE(single.rhat_defined);
  CHECK(single.ess > 1000.0);

  // Shifted chains are flagged.
  auto shifted = iid;
  for (auto& x : shifted[0]) x += 3.0;
  CHECK(diagnose(shifted).rhat > 1.1);
}

TEST_CASE("quantiles and binomial intervals") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(quantile_sorted(x, 0.0) == 1.0);
  CHECK(quantile_sorted(x, 0.5) == 3.0);
  CHECK(quantile_sorted(x, 0.05) == doctest::Approx(1.2));
  CHECK(quantile_sorted(x, 1.0) == 5.0);
  const auto [lo, hi] = wilson_interval(20.0, 100.0);
  CHECK(lo == doctest::Approx(0.1333).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.2888).epsilon(1e-3));
  const auto [zlo, zhi] = wilson_interval(0.0, 50.0);
  CHECK(zlo == 0.0);
  CHECK(zhi > 0.0);
}

TEST_CASE("posterior predictive: series, degenerate sample, report and CSV") {
  const auto m = small_model(4);
  const auto s = midpoint(3);
  const std::vector<BoundObservation> obs{{1, 2, 80.0, 20.0}, {2, 11, 90.0, 0.0}};
  const std::vector<double> one{42.0};
  const auto single = posterior_predictive(one, m, s, 3, obs, 2010);
  REQUIRE(single.series.size() == 1);
  CHECK(single.series[0].eir0 == 42.0);
  CHECK((single.series[0].trajectory.array() > 0.0).all());
  CHECK((single.series[0].trajectory.array() < 1.0).all());
  REQUIRE(single.observations.size() == 2);
  CHECK(single.observations[0].year == 2011);
  CHECK(single.observations[0].prevalence == doctest::Approx(0.2));
  CHECK(single.observations[0].day == doctest::Approx(365 + 45.0));

  std::vector<double> many;
  for (int i = 0; i < 101; ++i) many.push_back(10.0 + i);
  const auto pp = posterior_predictive(many, m, s, 3, obs, 2010);
  REQUIRE(pp.series.size() == 3);  // the median equals the mean here
  CHECK(pp.series[0].label == "mean");
  CHECK(pp.series[0].eir0 == doctest::Approx(60.0));
  CHECK(pp.series[1].eir0 == doctest::Approx(15.0));
  CHECK(pp.series[2].eir0 == doctest::Approx(105.0));

  HmcResult hmc;
  hmc.chains.resize(2);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 10; ++i) hmc.chains[static_cast<std::size_t>(c)].draws.push_back({0.1 * i - c, -1.0, 0.9, false});
  const auto result = summarize_hmc(hmc);
  CHECK(result.chains[1][3].eir0 == doctest::Approx(theta_to_eir(-0.7)));
  const auto json = nlohmann::json::parse(inference_report_json(result, pp, {"test", "abc", 2010, 3, {}, "single"}));
  CHECK(json["posterior"]["mean"].get<double>() == doctest::Approx(result.summary.mean));
  CHECK(json["traces"].size() == 2);
  const auto csv = predictive_csv(pp);
  CHECK(csv.rfind("kind,label,year,day,value,lower,upper\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 3 * 365 + 2);
}

TEST_CASE("synthetic recovery on a small surrogate") {
  // Observations drawn from the surrogate itself at a known Λ₀.
  const auto m = small_model(21);
  const auto s = midpoint(2);
  const double truth = 50.0;
  const auto traj = surrogate::predict(m, s.eir0 == truth ? s : [&] { auto t = s; t.eir0 = truth; return t; }(), 2);
  Rng rng(5);
  std::vector<BoundObservation> obs;
  for (int y = 0; y < 2; ++y) {
    for (int mo = 1; mo <= 12; ++mo) {
      const double p = monthly_prevalence(traj, y, mo);
      int pos = 0;
      for (int k = 0; k < 200; ++k) pos += rng.bernoulli(p);
      obs.push_back({y, mo, 200.0 - pos, static_cast<double>(pos)});
    }
  }
  HmcConfig c;
  c.chains = 4;
  c.steps = 300;
  c.warmup = 150;
  c.seed = 2;
  const auto r = infer_eir(m, s, 2, obs, c, surrogate::Precision::Double);
  MESSAGE("posterior " << r.summary.mean << " [" << r.summary.q05 << ", " << r.summary.q95 << "]");
  CHECK(r.summary.q05 < truth);
  CHECK(r.summary.q95 > truth);
}
