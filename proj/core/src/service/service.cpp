#include "msurr/service/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <regex>
#include <thread>
#include <vector>

// Room for bursts of concurrent clients (the library default is 5).
#define CPPHTTPLIB_LISTEN_BACKLOG 512
#include "httplib.h"
#include "json.hpp"
#include "msurr/error.hpp"
#include "msurr/inference/posterior.hpp"
#include "msurr/io/observations.hpp"
#include "msurr/io/params_io.hpp"
#include "msurr/io/scenario_io.hpp"
#include "msurr/io/text.hpp"
#include "msurr/surrogate/checkpoint.hpp"

namespace msurr::service {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

Reply reply(int status, const json& body) { return {status, body.dump()}; }

Reply error_reply(int status, std::string message, const std::vector<model::FieldError>& fields = {}) {
  json j{{"error", std::move(message)}};
  if (!fields.empty()) {
    json list = json::array();
    for (const auto& f : fields) list.push_back({{"field", f.field}, {"message", f.message}});
    j["errors"] = list;
  }
  return reply(status, j);
}

bool valid_name(std::string_view name) {
  static const std::regex pattern("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(name.begin(), name.end(), pattern);
}

std::vector<std::string_view> segments(std::string_view path) {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string_view> out;
  for (auto s : io::split(path, '/')) {
    if (!s.empty()) out.push_back(s);
  }
  return out;
}

struct PredictRequest {
  model::ScenarioParams scenario;
  int years = 0;
  std::vector<model::FieldError> errors;
};

PredictRequest parse_predict(const json& j, int max_years) {
  PredictRequest r;
  if (!j.is_object()) {
    r.errors.push_back({"", "expected a JSON object {scenario, years}"});
    return r;
  }
  if (!j.contains("scenario")) {
    r.errors.push_back({"scenario", "is required"});
  } else {
    r.scenario = io::scenario_from_json(j["scenario"].dump(), r.errors);
  }
  if (j.contains("years")) {
    const auto& y = j["years"];
    if (!y.is_number_integer() || y.get<long long>() < 1 || y.get<long long>() > max_years) {
      r.errors.push_back({"years", "must be an integer in [1, " + std::to_string(max_years) + "]"});
    } else {
      r.years = static_cast<int>(y.get<long long>());
    }
  } else {
    r.years = std::max<int>(1, static_cast<int>(r.scenario.nu.size()));
    if (r.years > max_years) r.errors.push_back({"years", "exceeds the maximum of " + std::to_string(max_years)});
  }
  // Usage entries beyond `years` are ignored, so a whole site schedule can
  // be sent with a shorter horizon.
  return r;
}

json trajectory_json(const surrogate::Trajectory& t) {
  json daily = json::array(), monthly = json::array(), annual = json::array();
  for (Eigen::Index y = 0; y < t.cols(); ++y) {
    std::vector<double> days(t.col(y).data(), t.col(y).data() + t.rows());
    daily.push_back(days);
    std::vector<double> months;
    for (int m = 1; m <= 12; ++m) months.push_back(inference::monthly_prevalence(t, static_cast<int>(y), m));
    monthly.push_back(months);
    annual.push_back(t.col(y).mean());
  }
  return {{"daily", daily}, {"monthly", monthly}, {"annual_mean", annual}};
}

json observations_json(const io::ObservationSet& obs) {
  json list = json::array();
  for (const auto& r : obs.records) {
    const auto [lo, hi] = inference::wilson_interval(r.positive, r.positive + r.negative);
    list.push_back({{"year", r.year},
                    {"month", r.month},
                    {"negative", r.negative},
                    {"positive", r.positive},
                    {"prevalence", r.prevalence()},
                    {"lower", lo},
                    {"upper", hi}});
  }
  return list;
}

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Cancelled {};

}  // namespace

std::string bounds_manifest_json(int max_years, std::size_t batch_cap) {
  using B = model::ScenarioBounds;
  const json range_fourier{{"min", B::fourier_min}, {"max", B::fourier_max}};
  json j{{"version", "v1"},
         {"eir0", {{"min", 0.0}, {"min_exclusive", true}, {"max", B::eir0_max}, {"sampled_min", B::eir0_min}}},
         {"mean_age_years", {{"min", B::mean_age_min}, {"max", B::mean_age_max}}},
         {"g", {{"length", 4}, {"min", B::fourier_min}, {"max", B::fourier_max}}},
         {"h", {{"length", 3}, {"min", B::fourier_min}, {"max", B::fourier_max}}},
         {"kappa", {{"length", 3}, {"min", 0.0}, {"max", 1.0}, {"sum", 1.0}, {"sum_tolerance", B::simplex_tolerance}}},
         {"nu", {{"min", B::nu_min}, {"max", B::nu_max}, {"max_length", "years"}}},
         {"years", {{"min", 1}, {"max", max_years}}},
         {"batch_cap", batch_cap}};
  return j.dump();
}

struct ScenarioService::Impl {
  struct Job {
    std::string id;
    std::string status = "queued";  // queued, running, done, failed
    int iteration = 0;
    int total = 0;
    std::string created;
    json request;
    json result;
    std::string error;
  };

  surrogate::SurrogateModel model;
  surrogate::Predictor predictor;
  std::string checksum;
  ServiceConfig config;
  httplib::Server server;
  std::thread server_thread;

  std::mutex mutex;
  std::condition_variable_any cv;
  std::condition_variable idle_cv;
  std::map<std::string, Job> jobs;
  std::deque<std::string> queue;
  int active = 0;
  long next_id = 1;
  std::atomic<bool> stopping{false};
  std::vector<std::jthread> workers;

  Impl(const surrogate::SurrogateModel& m, ServiceConfig c)
      : model(m), predictor(m), checksum(surrogate::model_checksum(m)), config(std::move(c)) {
    if (config.max_concurrent_jobs < 1) throw ConfigError("max_concurrent_jobs must be at least 1");
    if (config.max_years < 1) throw ConfigError("max_years must be at least 1");
    restore_jobs();
    for (int i = 0; i < config.max_concurrent_jobs; ++i) {
      workers.emplace_back([this](std::stop_token st) { work(st); });
    }
  }

  ~Impl() {
    stopping = true;
    for (auto& w : workers) w.request_stop();
    cv.notify_all();
    workers.clear();
  }

  void log(std::string_view line) const {
    if (config.log) config.log(line);
  }

  // ---- jobs -------------------------------------------------------------

  static json job_json(const Job& job) {
    json j{{"id", job.id},
           {"status", job.status},
           {"created", job.created},
           {"progress", {{"iteration", job.iteration}, {"total", job.total}}}};
    if (!job.result.is_null()) j["result"] = job.result;
    if (!job.error.empty()) j["error"] = job.error;
    return j;
  }

  void persist(const Job& job) const {
    if (config.jobs_dir.empty()) return;
    json j = job_json(job);
    j["request"] = job.request;
    io::write_file_atomic(config.jobs_dir / (job.id + ".json"), j.dump(2));
  }

  void restore_jobs() {
    if (config.jobs_dir.empty() || !fs::exists(config.jobs_dir)) return;
    for (const auto& entry : fs::directory_iterator(config.jobs_dir)) {
      if (entry.path().extension() != ".json") continue;
      try {
        const auto j = json::parse(io::read_file(entry.path()));
        Job job;
        job.id = j.at("id").get<std::string>();
        job.status = j.at("status").get<std::string>();
        job.created = j.value("created", "");
        job.iteration = j.at("progress").at("iteration").get<int>();
        job.total = j.at("progress").at("total").get<int>();
        job.request = j.value("request", json());
        if (j.contains("result")) job.result = j["result"];
        job.error = j.value("error", "");
        if (job.status == "queued" || job.status == "running") {
          job.status = "failed";
          job.error = "interrupted by a service restart";
          persist(job);
        }
        if (job.id.rfind("job-", 0) == 0) {
          next_id = std::max(next_id, std::stol(job.id.substr(4)) + 1);
        }
        jobs[job.id] = std::move(job);
      } catch (const std::exception& e) {
        log("skipping unreadable job file " + entry.path().string() + ": " + e.what());
      }
    }
  }

  void work(std::stop_token st) {
    for (;;) {
      std::string id;
      json request;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, st, [&] { return !queue.empty(); });
        if (st.stop_requested()) return;
        id = queue.front();
        queue.pop_front();
        auto& job = jobs[id];
        job.status = "running";
        request = job.request;
        ++active;
        persist(job);
      }
      log("job " + id + " running");
      json result;
      std::string error;
      try {
        result = run_job(id, request);
      } catch (const Cancelled&) {
        error = "cancelled at shutdown";
      } catch (const std::exception& e) {
        error = e.what();
      }
      {
        std::lock_guard lock(mutex);
        auto& job = jobs[id];
        if (error.empty()) {
          job.status = "done";
          job.result = std::move(result);
        } else {
          job.status = "failed";
          job.error = error;
        }
        --active;
        persist(job);
      }
      idle_cv.notify_all();
      log("job " + id + " " + (error.empty() ? "done" : "failed: " + error));
    }
  }

  json run_job(const std::string& id, const json& request) {
    const auto spec = parse_infer(request);
    if (!spec.errors.empty()) throw ConfigError(spec.errors.front().field + " " + spec.errors.front().message);
    const auto progress = [&](int it) {
      if (stopping) throw Cancelled{};
      std::lock_guard lock(mutex);
      jobs[id].iteration = it;
    };
    const auto result =
        inference::infer_eir(model, spec.scenario, spec.years, spec.observations, spec.hmc,
                             surrogate::Precision::Single, progress);
    std::vector<double> eirs;
    for (const auto& chain : result.chains)
      for (const auto& s : chain) eirs.push_back(s.eir0);
    const auto predictive =
        inference::posterior_predictive(eirs, model, spec.scenario, spec.years, spec.observations, spec.first_year);
    inference::ReportContext ctx{spec.site, checksum, spec.first_year, spec.years, spec.hmc, "single"};
    return json::parse(inference::inference_report_json(result, predictive, ctx));
  }

  struct InferSpec {
    std::string site;
    model::ScenarioParams scenario;
    int first_year = 0;
    int years = 0;
    std::vector<inference::BoundObservation> observations;
    inference::HmcConfig hmc;
    std::vector<model::FieldError> errors;
  };

  InferSpec parse_infer(const json& j) const {
    InferSpec s;
    s.hmc = config.default_hmc;
    auto& errors = s.errors;
    if (!j.is_object()) {
      errors.push_back({"", "expected a JSON object"});
      return s;
    }
    if (j.contains("site")) {
      if (!j["site"].is_string() || !valid_name(j["site"].get<std::string>())) {
        errors.push_back({"site", "must be a bundled site name"});
        return s;
      }
      s.site = j["site"].get<std::string>();
      const auto path = config.data_dir / "sites" / (s.site + ".site");
      if (!fs::exists(path)) {
        errors.push_back({"site", "unknown site '" + s.site + "'"});
        return s;
      }
      const auto site = io::load_site(path);
      s.scenario = model::scenario_from_site(site);
      s.first_year = site.first_usage_year;
    } else if (j.contains("scenario")) {
      s.scenario = io::scenario_from_json(j["scenario"].dump(), errors);
      s.site = s.scenario.id;
      if (!j.contains("first_year") || !j["first_year"].is_number_integer()) {
        errors.push_back({"first_year", "is required with an inline scenario"});
      } else {
        s.first_year = j["first_year"].get<int>();
      }
    } else {
      errors.push_back({"site", "either site or scenario is required"});
    }
    io::ObservationSet obs;
    if (!j.contains("observations")) {
      errors.push_back({"observations", "is required"});
    } else if (j["observations"].is_string()) {
      const auto name = j["observations"].get<std::string>();
      const auto path = config.data_dir / "observations" / (name + ".csv");
      if (!valid_name(name) || !fs::exists(path)) {
        errors.push_back({"observations", "unknown observation set '" + name + "'"});
      } else {
        obs = io::load_observations(path);
      }
    } else if (j["observations"].is_array()) {
      for (const auto& r : j["observations"]) {
        try {
          obs.records.push_back({r.at("year").get<int>(), r.at("month").get<int>(), r.at("negative").get<double>(),
                                 r.at("positive").get<double>()});
        } catch (const json::exception&) {
          errors.push_back({"observations", "records need numeric year, month, negative, positive"});
          break;
        }
      }
    } else {
      errors.push_back({"observations", "must be a bundled set name or an array of records"});
    }
    auto int_field = [&](const char* key, int& out, int lo, int hi) {
      if (!j.contains(key)) return;
      if (!j[key].is_number_integer() || j[key].get<long long>() < lo || j[key].get<long long>() > hi) {
        errors.push_back({key, "must be an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"});
        return;
      }
      out = static_cast<int>(j[key].get<long long>());
    };
    int_field("chains", s.hmc.chains, 1, config.max_chains);
    int_field("steps", s.hmc.steps, 2, config.max_steps);
    int_field("warmup", s.hmc.warmup, 0, config.max_steps);
    int_field("leapfrog", s.hmc.leapfrog, 1, 1024);
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned()) {
        errors.push_back({"seed", "must be a non-negative integer"});
      } else {
        s.hmc.seed = j["seed"].get<std::uint64_t>();
      }
    }
    if (!errors.empty()) return s;
    if (s.hmc.warmup >= s.hmc.steps) errors.push_back({"warmup", "must be smaller than steps"});
    if (obs.records.empty()) {
      errors.push_back({"observations", "must not be empty"});
      return s;
    }
    s.years = obs.last_year() - s.first_year + 1;
    if (s.years < 1 || s.years > config.max_years) {
      errors.push_back({"observations", "years must fall within " + std::to_string(config.max_years) +
                                            " years after first_year " + std::to_string(s.first_year)});
      return s;
    }
    try {
      s.observations = inference::bind_observations(obs, s.first_year, s.years);
    } catch (const ConfigError& e) {
      errors.push_back({"observations", e.what()});
    }
    return s;
  }

  Reply submit(std::string_view body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
    InferSpec spec;
    try {
      spec = parse_infer(j);
    } catch (const Error& e) {
      return error_reply(422, e.what());
    }
    if (!spec.errors.empty()) return error_reply(422, "invalid inference request", spec.errors);
    std::string id;
    {
      std::lock_guard lock(mutex);
      char buf[32];
      std::snprintf(buf, sizeof buf, "job-%06ld", next_id++);
      id = buf;
      Job job;
      job.id = id;
      job.created = now_iso();
      job.total = spec.hmc.steps;
      job.request = j;
      persist(job);
      jobs[id] = std::move(job);
      queue.push_back(id);
    }
    cv.notify_one();
    log("job " + id + " queued");
    return reply(202, {{"id", id}, {"status", "queued"}});
  }

  Reply job_status(std::string_view id) {
    std::lock_guard lock(mutex);
    const auto it = jobs.find(std::string(id));
    if (it == jobs.end()) return error_reply(404, "unknown job '" + std::string(id) + "'");
    return reply(200, job_json(it->second));
  }

  // ---- predictions ------------------------------------------------------

  json predict_one(const PredictRequest& r) const {
    json out = trajectory_json(predictor.predict(r.scenario, r.years));
    out["id"] = r.scenario.id;
    out["years"] = r.years;
    out["model_checksum"] = checksum;
    return out;
  }

  Reply predict(std::string_view body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
    const auto r = parse_predict(j, config.max_years);
    if (!r.errors.empty()) return error_reply(422, "invalid scenario", r.errors);
    return reply(200, predict_one(r));
  }

  Reply predict_batch(std::string_view body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
    const json* items = &j;
    if (j.is_object() && j.contains("requests")) items = &j["requests"];
    if (!items->is_array()) return error_reply(400, "expected an array of {scenario, years} requests");
    if (items->size() > config.batch_cap) {
      return error_reply(413, "batch of " + std::to_string(items->size()) + " exceeds the cap of " +
                                  std::to_string(config.batch_cap));
    }
    json results = json::array();
    for (const auto& item : *items) {
      const auto r = parse_predict(item, config.max_years);
      if (!r.errors.empty()) {
        json e = json::parse(error_reply(422, "invalid scenario", r.errors).body);
        e["status"] = 422;
        results.push_back(e);
        continue;
      }
      json ok = predict_one(r);
      ok["status"] = 200;
      results.push_back(std::move(ok));
    }
    return reply(200, {{"results", results}});
  }

  Reply site(std::string_view name) {
    if (!valid_name(name)) return error_reply(404, "unknown site");
    const auto path = config.data_dir / "sites" / (std::string(name) + ".site");
    if (!fs::exists(path)) return error_reply(404, "unknown site '" + std::string(name) + "'");
    const auto s = io::load_site(path);
    std::vector<std::string> warnings;
    const auto scenario = model::scenario_from_site(s, &warnings);
    json species = json::array();
    for (const auto& sp : s.species) {
      species.push_back({{"alpha", sp.alpha}, {"phi_bednet", sp.phi_bednet}, {"s_net", sp.s_net}, {"r_net", sp.r_net}});
    }
    json j{{"name", s.name},
           {"eir0", s.eir0},
           {"mean_age_years", s.mean_age_years},
           {"g", {s.rainfall.g0, s.rainfall.g[0], s.rainfall.g[1], s.rainfall.g[2]}},
           {"h", {s.rainfall.h[0], s.rainfall.h[1], s.rainfall.h[2]}},
           {"kappa", s.kappa},
           {"species", species},
           {"first_usage_year", s.first_usage_year},
           {"itn_usage", s.itn_usage},
           {"scenario", json::parse(io::scenario_to_json(scenario))},
           {"warnings", warnings},
           {"bounds", json::parse(bounds_manifest_json(config.max_years, config.batch_cap))}};
    return reply(200, j);
  }

  Reply sites() {
    std::vector<std::string> names;
    const auto dir = config.data_dir / "sites";
    if (fs::exists(dir)) {
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".site") names.push_back(e.path().stem().string());
      }
    }
    std::sort(names.begin(), names.end());
    return reply(200, {{"sites", names}});
  }

  Reply observations(std::string_view name) {
    const auto path = config.data_dir / "observations" / (std::string(name) + ".csv");
    if (!valid_name(name) || !fs::exists(path)) return error_reply(404, "unknown observation set");
    const auto obs = io::load_observations(path);
    return reply(200, {{"name", name}, {"records", observations_json(obs)}});
  }

  Reply handle(std::string_view method, std::string_view path, std::string_view body) {
    const auto seg = segments(path);
    if (seg.size() < 2 || seg[0] != "v1") return error_reply(404, "not found");
    const auto route = seg[1];
    const bool get = method == "GET", post = method == "POST";
    try {
      if (route == "healthz" && seg.size() == 2) {
        if (!get) return error_reply(405, "method not allowed");
        return reply(200, {{"status", "ok"}, {"model_checksum", checksum}, {"api", "v1"}});
      }
      if (route == "bounds" && seg.size() == 2) {
        if (!get) return error_reply(405, "method not allowed");
        return {200, bounds_manifest_json(config.max_years, config.batch_cap)};
      }
      if (route == "sites" && seg.size() == 2) return get ? sites() : error_reply(405, "method not allowed");
      if (route == "site" && seg.size() == 3) return get ? site(seg[2]) : error_reply(405, "method not allowed");
      if (route == "observations" && seg.size() == 3) {
        return get ? observations(seg[2]) : error_reply(405, "method not allowed");
      }
      if (route == "predict" && seg.size() == 2) return post ? predict(body) : error_reply(405, "method not allowed");
      if (route == "predict-batch" && seg.size() == 2) {
        return post ? predict_batch(body) : error_reply(405, "method not allowed");
      }
      if (route == "infer" && seg.size() == 2) return post ? submit(body) : error_reply(405, "method not allowed");
      if (route == "infer" && seg.size() == 3) return get ? job_status(seg[2]) : error_reply(405, "method not allowed");
    } catch (const FormatError& e) {
      return error_reply(400, e.what());
    } catch (const Error& e) {
      return error_reply(422, e.what());
    } catch (const std::exception& e) {
      return error_reply(500, e.what());
    }
    return error_reply(404, "not found");
  }

  void install_routes(ScenarioService& self) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = handle(req.method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
    server.Get(R"(/v1/.*)", forward);
    server.Post(R"(/v1/.*)", forward);
    if (!config.static_dir.empty()) {
      if (!server.set_mount_point("/", config.static_dir.string())) {
        throw ConfigError("static directory does not exist: " + config.static_dir.string());
      }
    }
    server.new_task_queue = [n = config.http_threads] { return new httplib::ThreadPool(static_cast<std::size_t>(n)); };
    server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
      log(req.method + " " + req.path + " " + std::to_string(res.status) + " " + std::to_string(req.body.size()) + "B");
    });
    (void)self;
  }
};

ScenarioService::ScenarioService(const surrogate::SurrogateModel& model, ServiceConfig config)
    : impl_(std::make_unique<Impl>(model, std::move(config))) {
  impl_->install_routes(*this);
}

ScenarioService::~ScenarioService() { stop(); }

Reply ScenarioService::handle(std::string_view method, std::string_view path, std::string_view body) {
  return impl_->handle(method, path, body);
}

const std::string& ScenarioService::model_checksum() const { return impl_->checksum; }

bool ScenarioService::listen() { return impl_->server.listen(impl_->config.host, impl_->config.port); }

int ScenarioService::start() {
  auto& s = impl_->server;
  int port = impl_->config.port;
  if (port == 0) {
    port = s.bind_to_any_port(impl_->config.host);
  } else if (!s.bind_to_port(impl_->config.host, port)) {
    port = -1;
  }
  if (port < 0) return -1;
  impl_->server_thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return port;
}

void ScenarioService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

void ScenarioService::wait_for_jobs() {
  std::unique_lock lock(impl_->mutex);
  impl_->idle_cv.wait(lock, [&] { return impl_->queue.empty() && impl_->active == 0; });
}

}  // namespace msurr::service
