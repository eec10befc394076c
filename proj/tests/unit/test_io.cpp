#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "msurr/error.hpp"
#include "msurr/io/observations.hpp"
#include "msurr/io/params_io.hpp"
#include "msurr/io/scenario_io.hpp"
#include "msurr/io/text.hpp"
#include "msurr/io/usage.hpp"

namespace fs = std::filesystem;
using namespace msurr;

namespace {

fs::path data_dir() { return fs::path(MSURR_DATA_DIR); }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "msurr_test_io";
  fs::create_directories(dir);
  return dir / name;
}

model::ScenarioParams sample_scenario(const std::string& id) {
  model::ScenarioParams s;
  s.id = id;
  s.eir0 = 23.2;
  s.mean_age_years = 18.5;
  s.rainfall.g0 = 2.574537504;
  s.rainfall.g = {3.489987862, 0.657536368, 0.565366933};
  s.rainfall.h = {-2.39714463, 2.189027167, -0.565822876};
  s.kappa = {0.25, 0.25, 0.5};
  s.nu = {0.1, 0.2, 0.1 + 0.2};
  return s;
}

bool same(const model::ScenarioParams& a, const model::ScenarioParams& b) {
  return a.id == b.id && a.eir0 == b.eir0 && a.mean_age_years == b.mean_age_years &&
         a.rainfall.g0 == b.rainfall.g0 && a.rainfall.g == b.rainfall.g && a.rainfall.h == b.rainfall.h &&
         a.kappa == b.kappa && a.nu == b.nu;
}

}  // namespace

TEST_CASE("text: doubles round-trip through their shortest form") {
  for (double x : {0.1, 1.0 / 3.0, -2.39714463, 1e-300, 6.02e23, 0.0}) {
    CHECK(io::parse_double(io::format_double(x), "x") == x);
  }
  CHECK(std::isnan(io::parse_double("NA", "x")));
  CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "NA");
  CHECK_THROWS_AS(io::parse_double("1.5x", "x"), FormatError);
  CHECK_THROWS_AS(io::parse_double("", "x"), FormatError);
}

TEST_CASE("text: atomic write leaves no temporary behind") {
  const auto path = scratch("atomic/nested/file.txt");
  io::write_file_atomic(path, "hello");
  CHECK(io::read_file(path) == "hello");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(path.parent_path())) ++entries;
  CHECK(entries == 1);
}

TEST_CASE("text: FNV-1a reference vectors") {
  CHECK(io::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("global params: bundled file matches the parameter table") {
  std::vector<std::string> ignored;
  const auto p = io::load_global_params(data_dir() / "params/global.params", &ignored);
  CHECK(p.dd == 5.0);
  CHECK(p.da == 200.0);
  CHECK(p.du == 110.0);
  CHECK(p.mum == 0.1253333);
  CHECK(p.rm == 67.6952);
  CHECK(p.ic0 == 18.02366);
  CHECK(p.kd == 0.476614);
  CHECK(p.cd == 0.068);
  CHECK(p.gamma1 == 1.82425);
  CHECK(p.sigma2 == 1.67);
  CHECK(p.gamma == 13.25);
  CHECK(p.delay_gam == 12.5);
  CHECK(p.beta == 21.2);
  CHECK(ignored == std::vector<std::string>{"rvm", "rva", "uv"});
  // The bundled file equals the compiled-in defaults.
  CHECK(io::serialize_global_params(p) == io::serialize_global_params(model::GlobalParams{}));
}

TEST_CASE("global params: round trip, unknown and duplicate keys") {
  model::GlobalParams p;
  p.beta = 19.75;
  p.gametocyte_lag = false;
  p.mosquito_substeps = 8;
  const auto back = io::parse_global_params(io::serialize_global_params(p));
  CHECK(io::serialize_global_params(back) == io::serialize_global_params(p));
  CHECK_THROWS_AS(io::parse_global_params("bogus = 1\n"), FormatError);
  CHECK_THROWS_AS(io::parse_global_params("dd = 5\ndd = 6\n"), FormatError);
  CHECK_THROWS_AS(io::parse_global_params("dd = five\n"), FormatError);
}

TEST_CASE("site: bundled Kolda file") {
  const auto site = io::load_site(data_dir() / "sites/kolda.site");
  CHECK(site.name == "kolda");
  CHECK(site.rainfall.g0 == 2.574537504);
  CHECK(site.rainfall.g[0] == 3.489987862);
  CHECK(site.rainfall.h[2] == -0.565822876);
  CHECK(site.kappa[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(site.kappa[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(site.kappa[2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(site.mean_age_years == 18.5);
  CHECK(site.first_usage_year == 2000);
  REQUIRE(site.itn_usage.size() == 21);
  CHECK(site.itn_usage[10] == 0.594891);

  const auto again = io::parse_site(io::serialize_site(site));
  CHECK(io::serialize_site(again) == io::serialize_site(site));
}

TEST_CASE("site: errors") {
  const std::string base =
      "mean_age_years = 18.5\ng0 = 1\ng1 = 0\ng2 = 0\ng3 = 0\nh1 = 0\nh2 = 0\nh3 = 0\n";
  CHECK_NOTHROW(io::parse_site(base + "kappa1 = 0.2\nkappa2 = 0.3\nkappa3 = 0.5\n"));
  SUBCASE("missing field") { CHECK_THROWS_AS(io::parse_site(base + "kappa1 = 0.5\nkappa2 = 0.5\n"), FormatError); }
  SUBCASE("kappa does not sum to one") {
    CHECK_THROWS_WITH_AS(io::parse_site(base + "kappa1 = 0.3\nkappa2 = 0.3\nkappa3 = 0.3\n"),
                         doctest::Contains("kappa"), ConfigError);
  }
  SUBCASE("near-simplex kappa is renormalized") {
    const auto s = io::parse_site(base + "kappa1 = 0.2\nkappa2 = 0.3\nkappa3 = 0.5000005\n");
    CHECK(s.kappa[0] + s.kappa[1] + s.kappa[2] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("unknown field") {
    CHECK_THROWS_AS(io::parse_site(base + "kappa1 = 0.2\nkappa2 = 0.3\nkappa3 = 0.5\ncolour = red\n"), FormatError);
  }
  SUBCASE("bound violation names the field") {
    CHECK_THROWS_WITH(io::parse_site(base + "kappa1 = 0.2\nkappa2 = 0.3\nkappa3 = 0.5\neir0 = 900\n"),
                      doctest::Contains("eir0"));
  }
}

TEST_CASE("usage: bundled ITN table") {
  const auto table = io::load_usage(data_dir() / "usage/kolda_itn.csv");
  CHECK(table.first_year == 2000);
  CHECK(table.last_year() == 2020);
  CHECK(table.at(2010) == 0.594891);
  CHECK(table.at(2016) == 0.788848);
  CHECK_THROWS_AS(table.at(1999), ConfigError);
  const auto w = table.window(2019, 4);
  CHECK(w == std::vector<double>{0.515891, 0.455649, 0.455649, 0.455649});
  CHECK(io::serialize_usage(io::parse_usage(io::serialize_usage(table))) == io::serialize_usage(table));
}

TEST_CASE("usage: errors") {
  CHECK_THROWS_AS(io::parse_usage(""), FormatError);
  CHECK_THROWS_AS(io::parse_usage("year,usage\n"), FormatError);
  CHECK_THROWS_WITH(io::parse_usage("year,usage\n2000,0.1\n2002,0.2\n"), doctest::Contains("gap"));
  CHECK_THROWS(io::parse_usage("year,usage\n2000,1.2\n"));
  CHECK_THROWS_AS(io::parse_usage("yr,u\n2000,0.1\n"), FormatError);
}

TEST_CASE("usage: values above the scenario bound are clamped with a warning") {
  model::SiteParams site;
  site.itn_usage = {0.5, 0.95, 0.788848};
  std::vector<std::string> warnings;
  const auto scenario = model::scenario_from_site(site, &warnings);
  CHECK(scenario.nu == std::vector<double>{0.5, 0.8, 0.788848});
  CHECK(warnings.size() == 1);
}

TEST_CASE("observations: all appendix rows parse and cross-check") {
  const auto obs = io::load_observations(data_dir() / "observations/kolda_dhs.csv");
  REQUIRE(obs.records.size() == 37);
  CHECK(obs.first_year() == 2008);
  CHECK(obs.last_year() == 2017);
  const auto& first = obs.records.front();
  CHECK(first.year == 2008);
  CHECK(first.month == 1);
  CHECK(first.negative == 107.425282);
  CHECK(first.positive == 20.024040);
  // Independent arithmetic: 20.024040 / 127.449322.
  CHECK(std::fabs(first.prevalence() - 0.157114) < 5e-7);
  CHECK(std::fabs(first.prevalence() - 20.024040 / (20.024040 + 107.425282)) < 1e-15);
  bool found = false;
  for (const auto& r : obs.records) {
    if (r.year == 2013 && r.month == 11) {
      CHECK(r.prevalence() == 0.0);
      found = true;
    }
  }
  CHECK(found);

  const auto again = io::parse_observations(io::serialize_observations(obs));
  CHECK(io::serialize_observations(again) == io::serialize_observations(obs));
}

TEST_CASE("observations: errors") {
  const std::string header = "year,month,negative,positive\n";
  CHECK_THROWS_AS(io::parse_observations("year,month,neg,pos\n2008,1,1,1\n"), FormatError);
  CHECK_THROWS(io::parse_observations(header + "2008,1,-1,2\n"));
  CHECK_THROWS(io::parse_observations(header + "2008,13,1,2\n"));
  CHECK_THROWS(io::parse_observations(header + "2008,1,0,0\n"));
  CHECK_THROWS(io::parse_observations("year,month,negative,positive,prevalence\n2008,1,3,1,0.3\n"));
  CHECK_NOTHROW(io::parse_observations("year,month,negative,positive,prevalence\n2008,1,3,1,0.25\n"));
}

TEST_CASE("scenarios: text round trip is exact") {
  std::vector<model::ScenarioParams> in{sample_scenario("a"), sample_scenario("b-2")};
  in[1].nu.clear();
  in[1].eir0 = 0.05;
  const auto text = io::serialize_scenarios(in);
  const auto out = io::parse_scenarios(text);
  REQUIRE(out.size() == 2);
  CHECK(same(in[0], out[0]));
  CHECK(same(in[1], out[1]));
  CHECK(io::serialize_scenarios(out) == text);

  const auto path = scratch("s.scenarios");
  io::write_file_atomic(path, text);
  CHECK(same(io::load_scenarios(path)[0], in[0]));
}

TEST_CASE("scenarios: text errors") {
  auto text = io::serialize_scenarios({sample_scenario("x")});
  CHECK_THROWS_AS(io::parse_scenarios(text.substr(text.find('\n') + 1)), FormatError);
  auto bad = text;
  bad.replace(bad.find("eir0 = 23.2"), 11, "eir0 = 501");
  CHECK_THROWS_WITH(io::parse_scenarios(bad), doctest::Contains("eir0"));
  bad = text;
  bad.replace(bad.find("g0 = "), 5, "gx = ");
  CHECK_THROWS_AS(io::parse_scenarios(bad), FormatError);
}

TEST_CASE("scenarios: JSON round trip and field errors") {
  const auto s = sample_scenario("json");
  std::vector<model::FieldError> errors;
  const auto back = io::scenario_from_json(io::scenario_to_json(s), errors);
  CHECK(errors.empty());
  CHECK(same(s, back));

  errors.clear();
  io::scenario_from_json(R"({"eir0": 600, "mean_age_years": 10, "g": [0,0,0,0], "h": [0,0,0],
                             "kappa": [0.5, 0.5, 0.5], "nu": [0.1, 0.9]})",
                         errors);
  std::vector<std::string> fields;
  for (const auto& e : errors) fields.push_back(e.field);
  CHECK(std::find(fields.begin(), fields.end(), "eir0") != fields.end());
  CHECK(std::find(fields.begin(), fields.end(), "mean_age_years") != fields.end());
  CHECK(std::find(fields.begin(), fields.end(), "nu[1]") != fields.end());
  CHECK(std::find_if(fields.begin(), fields.end(), [](const auto& f) { return f.rfind("kappa", 0) == 0; }) !=
        fields.end());

  errors.clear();
  io::scenario_from_json(R"({"eir0": "high"})", errors);
  CHECK(errors.size() >= 5);
  CHECK(errors.front().field == "eir0");
  CHECK_THROWS_AS(io::scenario_from_json("{", errors), FormatError);
}

TEST_CASE("sim outputs: round trip with missing values") {
  model::SimOutput o;
  o.id = "run7";
  o.seed = 18446744073709551615ULL;
  o.years = 1;
  for (int d = 0; d < model::kDaysPerYear; ++d) o.prevalence.push_back(d % 50 == 0 ? NAN : d / 1000.0 + 0.01);
  const auto text = io::serialize_sim_outputs({o});
  const auto back = io::parse_sim_outputs(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0].id == "run7");
  CHECK(back[0].seed == o.seed);
  for (std::size_t i = 0; i < o.prevalence.size(); ++i) {
    if (std::isnan(o.prevalence[i])) {
      CHECK(std::isnan(back[0].prevalence[i]));
    } else {
      CHECK(back[0].prevalence[i] == o.prevalence[i]);
    }
  }
  CHECK_THROWS_AS(io::parse_sim_outputs("# msurr-simoutput v1\nx\t1\t1\t0.5\n"), FormatError);
}
