// infer, serve
#include <csignal>
#include <memory>
#include <sstream>

#include <spdlog/spdlog.h>

#include "common.hpp"
#include "msurr/error.hpp"
#include "msurr/inference/posterior.hpp"
#include "msurr/io/observations.hpp"
#include "msurr/io/params_io.hpp"
#include "msurr/io/text.hpp"
#include "msurr/service/service.hpp"
#include "msurr/surrogate/checkpoint.hpp"

namespace msurr::cli {
namespace {

struct InferOptions {
  std::string model, site, obs, out;
  int chains = 10;
  int steps = 2000;
  int warmup = 1000;
  int leapfrog = 32;
  std::uint64_t seed = 1;
  int first_year = 0;  // 0: the site's first usage year
  bool use_double = false;
  bool recalibrate = false;
  SimOptions sim;
};

std::string samples_csv(const inference::InferenceResult& r) {
  std::ostringstream s;
  s << "chain,step,eir0,theta,log_posterior,accept_stat\n";
  for (const auto& chain : r.chains) {
    for (const auto& p : chain) {
      s << p.chain << ',' << p.step << ',' << io::format_double(p.eir0) << ',' << io::format_double(p.theta) << ','
        << io::format_double(p.log_posterior) << ',' << io::format_double(p.accept_stat) << '\n';
    }
  }
  return s.str();
}

void run_infer(const InferOptions& o, const CLI::App& cmd) {
  const auto model = surrogate::load_checkpoint(o.model);
  const auto site = io::load_site(o.site);
  const auto obs = io::load_observations(o.obs);
  std::vector<std::string> warnings;
  const auto scenario = model::scenario_from_site(site, &warnings);
  for (const auto& w : warnings) spdlog::warn("{}", w);

  const int first_year = o.first_year != 0 ? o.first_year : site.first_usage_year;
  if (first_year == 0) throw ConfigError("the site has no usage start year; pass --first-year");
  const int years = obs.last_year() - first_year + 1;
  if (years < 1) throw ConfigError("observations end before --first-year");
  const auto bound = inference::bind_observations(obs, first_year, years);

  inference::HmcConfig hmc;
  hmc.chains = o.chains;
  hmc.steps = o.steps;
  hmc.warmup = o.warmup;
  hmc.leapfrog = o.leapfrog;
  hmc.seed = o.seed;
  hmc.validate();
  const auto precision = o.use_double ? surrogate::Precision::Double : surrogate::Precision::Single;

  spdlog::info("sampling baseline EIR for {} ({}-{}, {} monthly observations): {} chains x {} steps", site.name,
               first_year, first_year + years - 1, bound.size(), hmc.chains, hmc.steps);
  int next_report = 0;
  const auto result = inference::infer_eir(model, scenario, years, bound, hmc, precision, [&](int iteration) {
    if (iteration >= next_report) {
      spdlog::info("iteration {}/{}", iteration, hmc.steps);
      next_report = iteration + std::max(1, hmc.steps / 10);
    }
  });
  const auto& s = result.summary;
  spdlog::info("baseline EIR {:.2f} ± {:.2f} (90% interval {:.2f}-{:.2f}), R-hat {:.3f}, ESS {:.0f}, {} divergences, "
               "{:.1f}s",
               s.mean, s.sd, s.q05, s.q95, s.diagnostics.rhat, s.diagnostics.ess, s.divergences, result.seconds);
  if (s.diagnostics.rhat_defined && s.diagnostics.rhat > 1.01) spdlog::warn("chains have not mixed (R-hat > 1.01)");

  std::vector<double> eirs;
  for (const auto& chain : result.chains) {
    for (const auto& p : chain) eirs.push_back(p.eir0);
  }
  const auto predictive = inference::posterior_predictive(eirs, model, scenario, years, bound, first_year);

  std::unique_ptr<model::SimOutput> ibm;
  if (o.recalibrate) {
    spdlog::info("re-running the simulator at the posterior mean {:.2f}", s.mean);
    ibm = std::make_unique<model::SimOutput>(
        inference::recalibrate_ibm(s.mean, site, scenario.nu, years, o.sim.resolve(o.seed)));
  }

  const fs::path out = o.out;
  fs::create_directories(out);
  const inference::ReportContext ctx{site.name, surrogate::model_checksum(model), first_year, years, hmc,
                                     o.use_double ? "double" : "single"};
  io::write_file_atomic(out / "report.json", inference::inference_report_json(result, predictive, ctx, ibm.get()));
  io::write_file_atomic(out / "predictive.csv", inference::predictive_csv(predictive, ibm.get()));
  io::write_file_atomic(out / "samples.csv", samples_csv(result));
  record_run(out, cmd);
  spdlog::info("wrote {}", (out / "report.json").string());
}

struct ServeOptions {
  std::string model, host = "127.0.0.1", data_dir, jobs_dir, static_dir;
  int port = 8080;
  std::size_t batch_cap = 1000;
  int max_jobs = 2;
  int threads = 8;
};

void run_serve(const ServeOptions& o) {
  const auto model = surrogate::load_checkpoint(o.model);
  service::ServiceConfig config;
  config.host = o.host;
  config.port = o.port;
  config.data_dir = o.data_dir;
  config.jobs_dir = o.jobs_dir;
  config.static_dir = o.static_dir;
  config.batch_cap = o.batch_cap;
  config.max_concurrent_jobs = o.max_jobs;
  config.http_threads = o.threads;
  config.log = [](std::string_view line) { spdlog::info("{}", line); };

  // Block the shutdown signals before any thread starts so that only the
  // sigwait below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::ScenarioService svc(model, config);
  const int port = svc.start();
  if (port < 0) throw DomainError("cannot listen on " + o.host + ":" + std::to_string(o.port));
  spdlog::info("serving model {} on http://{}:{}", svc.model_checksum(), o.host, port);
  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("signal {} received, shutting down", sig);
  svc.stop();
}

}  // namespace

void register_infer_commands(CLI::App& app) {
  {
    auto o = std::make_shared<InferOptions>();
    auto* cmd = app.add_subcommand("infer", "Sample the posterior of a site's baseline EIR with HMC");
    cmd->add_option("--model", o->model, "Checkpoint")->required()->check(CLI::ExistingFile);
    cmd->add_option("--site", o->site, "Site file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--obs", o->obs, "Monthly observations CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--chains", o->chains, "Chains")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--steps", o->steps, "Iterations per chain, warm-up included")->capture_default_str();
    cmd->add_option("--warmup", o->warmup, "Warm-up iterations per chain")->capture_default_str();
    cmd->add_option("--leapfrog", o->leapfrog, "Leapfrog steps per iteration")->capture_default_str();
    cmd->add_option("--seed", o->seed, "Sampler seed (also seeds --recalibrate)")->capture_default_str();
    cmd->add_option("--first-year", o->first_year, "Calendar year of the first simulated year (default: site)");
    cmd->add_flag("--double", o->use_double, "Evaluate the surrogate in double precision");
    cmd->add_flag("--recalibrate", o->recalibrate, "Re-run the simulator at the posterior mean");
    o->sim.add_to(*cmd);
    cmd->add_option("--out", o->out, "Output directory")->required();
    cmd->callback([o, cmd] { run_infer(*o, *cmd); });
  }
  {
    auto o = std::make_shared<ServeOptions>();
    auto* cmd = app.add_subcommand("serve", "Serve the /v1 scenario API");
    cmd->add_option("--model", o->model, "Checkpoint")->required()->check(CLI::ExistingFile);
    cmd->add_option("--host", o->host, "Bind address")->capture_default_str();
    cmd->add_option("--port", o->port, "Port (0: any free port)")->capture_default_str()->check(CLI::Range(0, 65535));
    cmd->add_option("--data-dir", o->data_dir, "Bundled sites/ and observations/")->check(CLI::ExistingDirectory);
    cmd->add_option("--jobs-dir", o->jobs_dir, "Persist inference jobs here");
    cmd->add_option("--static-dir", o->static_dir, "Static front-end assets")->check(CLI::ExistingDirectory);
    cmd->add_option("--batch-cap", o->batch_cap, "Maximum predict-batch items")->capture_default_str();
    cmd->add_option("--max-jobs", o->max_jobs, "Concurrent inference jobs")->capture_default_str();
    cmd->add_option("--threads", o->threads, "HTTP worker threads")->capture_default_str();
    cmd->callback([o] { run_serve(*o); });
  }
}

}  // namespace msurr::cli
