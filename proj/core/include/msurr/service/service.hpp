#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "msurr/inference/hmc.hpp"
#include "msurr/surrogate/model.hpp"

namespace msurr::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;                         // 0 picks a free port
  std::filesystem::path data_dir;          // bundled sites/ and observations/
  std::filesystem::path jobs_dir;          // inference job state; empty disables persistence
  std::filesystem::path static_dir;        // served at "/" when set
  std::size_t batch_cap = 1000;            // /v1/predict-batch items
  int max_years = 100;
  int max_concurrent_jobs = 2;
  int http_threads = 8;
  inference::HmcConfig default_hmc;        // infer-request defaults
  int max_chains = 64;
  int max_steps = 100000;
  std::function<void(std::string_view)> log;  // one line per request / job event
};

/// HTTP reply produced by the router; independent of the socket layer so
/// handlers can be exercised and replayed directly.
struct Reply {
  int status = 200;
  std::string body;  // JSON
};

/// The /v1 JSON API over a trained surrogate:
///   GET  /v1/healthz            liveness + model checksum
///   GET  /v1/bounds             input-domain manifest shared with clients
///   GET  /v1/sites              bundled site names
///   GET  /v1/site/{name}        site parameters and its scenario view
///   GET  /v1/observations/{name} bundled observation set with 95% intervals
///   POST /v1/predict            {scenario, years} -> daily/monthly trajectory
///   POST /v1/predict-batch      [{scenario, years}, ...] -> per-item results
///   POST /v1/infer              start an HMC job -> 202 {id}
///   GET  /v1/infer/{id}         job status, progress and result
/// /v1/predict is a pure function of (model checksum, request).
class ScenarioService {
 public:
  ScenarioService(const surrogate::SurrogateModel& model, ServiceConfig config);
  ~ScenarioService();
  ScenarioService(const ScenarioService&) = delete;
  ScenarioService& operator=(const ScenarioService&) = delete;

  Reply handle(std::string_view method, std::string_view path, std::string_view body);

  const std::string& model_checksum() const;

  /// Bind and serve until stop(); returns false when binding fails.
  bool listen();
  /// Bind, start serving on a background thread and return the bound port
  /// (-1 on failure).
  int start();
  void stop();

  /// Block until no inference job is queued or running.
  void wait_for_jobs();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Bounds manifest served at /v1/bounds (also embedded in /v1/site).
std::string bounds_manifest_json(int max_years, std::size_t batch_cap);

}  // namespace msurr::service
