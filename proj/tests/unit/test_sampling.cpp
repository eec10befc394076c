#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "msurr/error.hpp"
#include "msurr/io/text.hpp"
#include "msurr/io/usage.hpp"
#include "msurr/sampling/sampling.hpp"

namespace fs = std::filesystem;
using namespace msurr;
using sampling::Split;

namespace {

bool stratified(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    std::vector<int> bins(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = m(i, j);
      if (!(x >= 0.0 && x < 1.0)) return false;
      ++bins[static_cast<std::size_t>(std::floor(x * static_cast<double>(n)))];
    }
    if (std::any_of(bins.begin(), bins.end(), [](int c) { return c != 1; })) return false;
  }
  return true;
}

model::SimConfig tiny_config() {
  model::SimConfig c;
  c.population = 150;
  c.warmup_years = 1;
  c.calibration_years = 1;
  c.calibration_tolerance = 0.1;
  return c;
}

io::UsageTable kolda_usage() { return io::load_usage(fs::path(MSURR_DATA_DIR) / "usage/kolda_itn.csv"); }

}  // namespace

TEST_CASE("latin hypercube: one point per stratum") {
  const auto q = sampling::latin_hypercube(4, 1, 3);
  std::vector<double> col(q.data(), q.data() + 4);
  std::sort(col.begin(), col.end());
  for (int k = 0; k < 4; ++k) {
    CHECK(col[k] >= k / 4.0);
    CHECK(col[k] < (k + 1) / 4.0);
  }
  CHECK(stratified(sampling::latin_hypercube(100, 28, 11)));
  for (int count : {10, 100, 1000}) CHECK(stratified(sampling::latin_hypercube(count, 5, 99 + count)));
  CHECK(sampling::latin_hypercube(20, 6, 5) == sampling::latin_hypercube(20, 6, 5));
  CHECK(sampling::latin_hypercube(20, 6, 5) != sampling::latin_hypercube(20, 6, 6));
  CHECK_THROWS_AS(sampling::latin_hypercube(0, 3, 1), ConfigError);
}

TEST_CASE("transform margins: midpoint, corners and arity") {
  std::vector<double> mid(12 + 3, 0.5);
  const auto s = sampling::transform_margins(mid, 3);
  CHECK(s.eir0 == doctest::Approx(250.0));
  CHECK(s.mean_age_years == doctest::Approx(35.1));
  CHECK(s.rainfall.g0 == doctest::Approx(0.0));
  for (int i = 0; i < 3; ++i) {
    CHECK(s.rainfall.g[i] == doctest::Approx(0.0));
    CHECK(s.rainfall.h[i] == doctest::Approx(0.0));
    CHECK(s.kappa[i] == doctest::Approx(1.0 / 3.0));
  }
  CHECK(s.nu == std::vector<double>{0.4, 0.4, 0.4});

  std::vector<double> lo(12 + 2, 0.0);
  const auto z = sampling::transform_margins(lo, 2);
  CHECK(z.eir0 == 0.05);
  CHECK(z.mean_age_years == 14.8);
  CHECK(z.rainfall.g0 == -10.0);
  CHECK(z.rainfall.h[2] == -10.0);
  CHECK(z.nu == std::vector<double>{0.0, 0.0});
  CHECK(z.kappa[0] == doctest::Approx(1.0 / 3.0));
  CHECK_NOTHROW(z.validate());

  std::vector<double> hi(12, 1.0);
  hi[10] = hi[11] = 0.0;
  const auto k = sampling::transform_margins(hi, 0);
  CHECK(k.kappa == std::array<double, 3>{1.0, 0.0, 0.0});
  CHECK(k.eir0 == 500.0);
  CHECK(k.mean_age_years == doctest::Approx(55.4));

  CHECK_THROWS_AS(sampling::transform_margins(mid, 2), ConfigError);
  CHECK_THROWS_AS(sampling::transform_margins(std::vector<double>(11, 0.5), 0), ConfigError);
}

TEST_CASE("transform margins: log-scale baseline EIR option") {
  std::vector<double> p(12, 0.5);
  sampling::MarginOptions log_opts;
  log_opts.log_eir = true;
  CHECK(sampling::transform_margins(p, 0, log_opts).eir0 == doctest::Approx(std::sqrt(0.05 * 500.0)));
  p[0] = 0.0;
  CHECK(sampling::transform_margins(p, 0, log_opts).eir0 == doctest::Approx(0.05));
}

TEST_CASE("expand_nu holds the last knot") {
  CHECK(sampling::expand_nu({}, 3) == std::vector<double>{0.0, 0.0, 0.0});
  const std::vector<double> one{0.5};
  CHECK(sampling::expand_nu(one, 3) == std::vector<double>{0.5, 0.5, 0.5});
  const std::vector<double> two{0.1, 0.7};
  CHECK(sampling::expand_nu(two, 4) == std::vector<double>{0.1, 0.7, 0.7, 0.7});
  CHECK_THROWS_AS(sampling::expand_nu(two, 1), ConfigError);
}

TEST_CASE("sampled scenarios satisfy the input-domain bounds") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (const auto& s : sampling::sample_scenarios(2, 3, seed)) {
      REQUIRE(model::scenario_field_errors(s).empty());
    }
  }
  const auto a = sampling::sample_scenarios(10, 4, 42);
  CHECK(a.front().id == "s00000");
  CHECK(a.back().id == "s00009");
}

TEST_CASE("historic scenarios use contiguous windows of the usage table") {
  const auto table = kolda_usage();
  CHECK(table.window(2008, 3) == std::vector<double>{0.214104, 0.426100, 0.594891});
  const std::vector<io::UsageTable> tables{table};
  const auto scenarios = sampling::sample_historic_scenarios(200, 6, tables, 8);
  for (const auto& s : scenarios) {
    REQUIRE(s.nu.size() == 6);
    bool found = false;
    for (int y = table.first_year; y <= table.last_year() - 5; ++y) found = found || table.window(y, 6) == s.nu;
    CHECK(found);
  }
  CHECK(sampling::sample_historic_scenarios(1, 6, tables, 5)[0].nu ==
        sampling::sample_historic_scenarios(1, 6, tables, 5)[0].nu);

  io::UsageTable high{1990, {0.9, 1.0, 0.2}};
  const std::vector<io::UsageTable> both{table, high};
  for (const auto& s : sampling::sample_historic_scenarios(300, 3, both, 1)) {
    for (double x : s.nu) CHECK((x >= 0.0 && x <= 0.8));
    CHECK(model::scenario_field_errors(s).empty());
  }
}

TEST_CASE("dataset: split arithmetic, determinism across worker counts, directory round trip") {
  const auto config = tiny_config();
  auto scenarios = sampling::sample_scenarios(10, 2, 77);
  for (auto& s : scenarios) s.eir0 = std::clamp(s.eir0, 5.0, 60.0);  // keep the smoke run cheap

  sampling::GenerateOptions serial;
  serial.threads = 1;
  const auto a = sampling::run_scenarios(scenarios, 2, config, 77, serial);
  REQUIRE(a.size() + a.failures.size() == 10);
  sampling::GenerateOptions parallel;
  parallel.threads = 3;
  const auto b = sampling::run_scenarios(scenarios, 2, config, 77, parallel);
  CHECK(a.digest() == b.digest());

  if (!a.partial()) {
    CHECK(a.indices(Split::Train).size() == 8);
    CHECK(a.indices(Split::Validation).size() == 2);
  }
  for (const auto& o : a.outputs) {
    CHECK(o.prevalence.size() == 2u * 365u);
  }

  const auto dir = fs::temp_directory_path() / "msurr_test_dataset";
  fs::remove_all(dir);
  sampling::save_dataset(dir, a);
  const auto back = sampling::load_dataset(dir);
  CHECK(back.digest() == a.digest());
  CHECK(back.provenance.population == config.population);
  sampling::save_dataset(dir, a);  // overwrite in place
  CHECK(!fs::exists(dir.string() + ".partial"));

  auto text = io::read_file(dir / "outputs.txt");
  text[text.find("\t2\t") + 3] = text[text.find("\t2\t") + 3] == '0' ? '1' : '0';
  io::write_file_atomic(dir / "outputs.txt", text);
  CHECK_THROWS_AS(sampling::load_dataset(dir), FormatError);
}

TEST_CASE("dataset: failures are recorded, not fatal") {
  auto scenarios = sampling::sample_scenarios(3, 1, 5);
  scenarios[1].rainfall.g0 = -10.0;
  scenarios[1].rainfall.g = {0.0, 0.0, 0.0};
  scenarios[1].rainfall.h = {0.0, 0.0, 0.0};  // never rains
  for (auto& s : scenarios) s.eir0 = 10.0;
  sampling::GenerateOptions opts;
  opts.threads = 1;
  const auto d = sampling::run_scenarios(scenarios, 1, tiny_config(), 5, opts);
  CHECK(d.partial());
  REQUIRE(d.failures.size() == 1);
  CHECK(d.failures[0].id == "s00001");
  CHECK(d.size() == 2);
  CHECK_THROWS_AS(sampling::generate_dataset(4, 1, tiny_config(), 1), ConfigError);
}
