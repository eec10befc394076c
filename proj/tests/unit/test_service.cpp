#include <filesystem>
#include <future>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "msurr/io/scenario_io.hpp"
#include "msurr/io/text.hpp"
#include "msurr/sampling/sampling.hpp"
#include "msurr/service/service.hpp"
#include "msurr/surrogate/checkpoint.hpp"
// After Eigen: glibc's <resolv.h> (pulled in by httplib) defines a `_res` macro.
#include "httplib.h"

namespace fs = std::filesystem;
using namespace msurr;
using nlohmann::json;

namespace {

surrogate::SurrogateModel tiny_model() {
  surrogate::SurrogateModel m;
  m.features.rainfall_resolution = 8;
  std::vector<Eigen::MatrixXd> raw;
  for (const auto& s : sampling::sample_scenarios(10, 3, 1)) raw.push_back(featurize(s, 3, m.features));
  m.standardizer = surrogate::Standardizer::fit(raw);
  m.network = surrogate::Network::initialized({m.features.dim(), 5, 4, 365, surrogate::CellType::Lstm}, 3);
  return m;
}

service::ServiceConfig config(const fs::path& jobs = {}) {
  service::ServiceConfig c;
  c.data_dir = MSURR_DATA_DIR;
  c.jobs_dir = jobs;
  c.port = 0;
  c.batch_cap = 5;
  return c;
}

json scenario_json() {
  return json::parse(io::scenario_to_json(sampling::transform_margins(std::vector<double>(12 + 2, 0.5), 2)));
}

json request(int years) { return {{"scenario", scenario_json()}, {"years", years}}; }

json body(const service::Reply& r) { return json::parse(r.body); }

}  // namespace

TEST_CASE("service: health, bounds, sites") {
  const auto model = tiny_model();
  service::ScenarioService svc(model, config());
  const auto h = svc.handle("GET", "/v1/healthz", "");
  CHECK(h.status == 200);
  CHECK(body(h)["model_checksum"] == surrogate::model_checksum(model));

  const auto b = body(svc.handle("GET", "/v1/bounds", ""));
  CHECK(b["nu"]["max"] == 0.8);
  CHECK(b["mean_age_years"]["min"] == 14.8);
  CHECK(b["eir0"]["max"] == 500.0);

  const auto k = svc.handle("GET", "/v1/site/kolda", "");
  REQUIRE(k.status == 200);
  const auto site = body(k);
  CHECK(site["g"][1] == 3.489987862);
  CHECK(site["kappa"] == json::array({0.25, 0.25, 0.5}));
  CHECK(site["mean_age_years"] == 18.5);
  CHECK(site["first_usage_year"] == 2000);
  CHECK(site["bounds"]["nu"]["max"] == 0.8);
  CHECK(svc.handle("GET", "/v1/site/atlantis", "").status == 404);
  CHECK(svc.handle("GET", "/v1/site/..%2F..", "").status == 404);
  CHECK(body(svc.handle("GET", "/v1/sites", ""))["sites"] == json::array({"kolda"}));
  const auto obs = body(svc.handle("GET", "/v1/observations/kolda_dhs", ""));
  REQUIRE(obs["records"].size() == 37);
  CHECK(obs["records"][0]["prevalence"].get<double>() == doctest::Approx(0.157114).epsilon(1e-5));
  CHECK(svc.handle("GET", "/v1/nothing", "").status == 404);
  CHECK(svc.handle("POST", "/v1/healthz", "").status == 405);
}

TEST_CASE("service: predict, validation and batch") {
  service::ScenarioService svc(tiny_model(), config());
  // The Kolda scenario view with the posterior-scale baseline EIR.
  auto kolda = body(svc.handle("GET", "/v1/site/kolda", ""))["scenario"];
  kolda["eir0"] = 23.2;
  const auto r = svc.handle("POST", "/v1/predict", json{{"scenario", kolda}, {"years", 19}}.dump());
  REQUIRE(r.status == 200);
  const auto p = body(r);
  REQUIRE(p["daily"].size() == 19);
  for (const auto& year : p["daily"]) {
    REQUIRE(year.size() == 365);
    for (const auto& v : year) CHECK((v.get<double>() > 0.0 && v.get<double>() < 1.0));
  }
  CHECK(p["monthly"][0].size() == 12);

  auto bad = request(2);
  bad["scenario"]["nu"] = {0.2, 0.9};
  const auto e = svc.handle("POST", "/v1/predict", bad.dump());
  CHECK(e.status == 422);
  CHECK(body(e)["errors"][0]["field"] == "nu[1]");
  CHECK(svc.handle("POST", "/v1/predict", "{\"scenario\":").status == 400);
  auto no_years = request(2);
  no_years["years"] = 0;
  CHECK(svc.handle("POST", "/v1/predict", no_years.dump()).status == 422);

  const auto single = body(svc.handle("POST", "/v1/predict", request(3).dump()));
  const auto one = body(svc.handle("POST", "/v1/predict-batch", json::array({request(3)}).dump()));
  REQUIRE(one["results"].size() == 1);
  CHECK(one["results"][0]["daily"] == single["daily"]);

  const auto mixed = body(svc.handle("POST", "/v1/predict-batch", json::array({request(2), bad, request(1)}).dump()));
  CHECK(mixed["results"][0]["status"] == 200);
  CHECK(mixed["results"][1]["status"] == 422);
  CHECK(mixed["results"][2]["daily"].size() == 1);
  json six = json::array();
  for (int i = 0; i < 6; ++i) six.push_back(request(1));
  CHECK(svc.handle("POST", "/v1/predict-batch", six.dump()).status == 413);
}

TEST_CASE("service: concurrent HTTP replay equals serial results; static assets") {
  const auto dir = fs::temp_directory_path() / "msurr_static_test";
  fs::create_directories(dir);
  io::write_file_atomic(dir / "index.html", "<html>explorer</html>");
  auto c = config();
  c.static_dir = dir;
  service::ScenarioService svc(tiny_model(), c);
  const int port = svc.start();
  REQUIRE(port > 0);

  std::vector<std::string> bodies;
  for (int i = 0; i < 8; ++i) {
    auto q = request(1 + i % 4);
    q["scenario"]["eir0"] = 5.0 + 40.0 * i;
    bodies.push_back(q.dump());
  }
  std::vector<std::string> serial;
  for (const auto& b : bodies) serial.push_back(svc.handle("POST", "/v1/predict", b).body);

  std::vector<std::future<std::string>> inflight;
  for (int k = 0; k < 64; ++k) {
    inflight.push_back(std::async(std::launch::async, [&, k] {
      httplib::Client cli("127.0.0.1", port);
      auto res = cli.Post("/v1/predict", bodies[static_cast<std::size_t>(k % 8)], "application/json");
      return res && res->status == 200 ? res->body : std::string("error");
    }));
  }
  for (int k = 0; k < 64; ++k) CHECK(inflight[static_cast<std::size_t>(k)].get() == serial[static_cast<std::size_t>(k % 8)]);

  httplib::Client cli("127.0.0.1", port);
  auto page = cli.Get("/index.html");
  REQUIRE(page);
  CHECK(page->body == "<html>explorer</html>");
  auto health = cli.Get("/v1/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  svc.stop();
}

TEST_CASE("service: inference jobs run, persist and survive restarts") {
  const auto jobs = fs::temp_directory_path() / "msurr_jobs_test";
  fs::remove_all(jobs);
  const auto model = tiny_model();
  json req{{"site", "kolda"}, {"observations", "kolda_dhs"}, {"chains", 2}, {"steps", 12}, {"warmup", 6},
           {"leapfrog", 4}, {"seed", 3}};
  std::string first;
  {
    service::ScenarioService svc(model, config(jobs));
    const auto a = svc.handle("POST", "/v1/infer", req.dump());
    REQUIRE(a.status == 202);
    const auto b = svc.handle("POST", "/v1/infer", req.dump());
    first = body(a)["id"];
    CHECK(first != body(b)["id"].get<std::string>());
    const auto s = body(svc.handle("GET", "/v1/infer/" + first, ""));
    CHECK((s["status"] == "queued" || s["status"] == "running" || s["status"] == "done"));
    svc.wait_for_jobs();
    const auto done = body(svc.handle("GET", "/v1/infer/" + first, ""));
    REQUIRE(done["status"] == "done");
    CHECK(done["progress"]["iteration"] == 12);
    CHECK(done["result"]["posterior"]["mean"].get<double>() > 0.0);
    CHECK(done["result"]["traces"].size() == 2);
    CHECK(svc.handle("GET", "/v1/infer/job-999999", "").status == 404);

    auto invalid = req;
    invalid["chains"] = 0;
    CHECK(svc.handle("POST", "/v1/infer", invalid.dump()).status == 422);
    invalid = req;
    invalid["site"] = "atlantis";
    CHECK(svc.handle("POST", "/v1/infer", invalid.dump()).status == 422);
    CHECK(svc.handle("POST", "/v1/infer", "[").status == 400);
  }
  CHECK(fs::exists(jobs / (first + ".json")));
  service::ScenarioService again(model, config(jobs));
  const auto restored = body(again.handle("GET", "/v1/infer/" + first, ""));
  CHECK(restored["status"] == "done");
  const auto next = body(again.handle("POST", "/v1/infer", req.dump()))["id"].get<std::string>();
  CHECK(next == "job-000003");
  again.wait_for_jobs();
}
