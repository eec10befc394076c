// simulate, sample
#include <memory>

#include <spdlog/spdlog.h>

#include "common.hpp"
#include "json.hpp"
#include "msurr/error.hpp"
#include "msurr/io/params_io.hpp"
#include "msurr/io/scenario_io.hpp"
#include "msurr/io/text.hpp"
#include "msurr/io/usage.hpp"
#include "msurr/sampling/sampling.hpp"

namespace msurr::cli {
namespace {

struct SimulateOptions {
  std::string site, scenario, out;
  int years = 0;
  std::uint64_t seed = 1;
  SimOptions sim;
};

void run_simulate(const SimulateOptions& o, const CLI::App& cmd) {
  const auto config = o.sim.resolve(o.seed);
  struct Job {
    model::SiteParams site;
    std::string id;
    std::vector<double> nu;
    int years;
  };
  std::vector<Job> jobs;
  if (!o.site.empty()) {
    auto site = io::load_site(o.site);
    const int years = o.years > 0 ? o.years : std::max<int>(1, static_cast<int>(site.itn_usage.size()));
    jobs.push_back({site, site.name, site.itn_usage, years});
  } else {
    int file_years = 0;
    for (auto& s : load_scenario_file(o.scenario, file_years)) {
      s.validate();
      const int years = o.years > 0 ? o.years
                        : file_years > 0 ? file_years
                                         : std::max<int>(1, static_cast<int>(s.nu.size()));
      jobs.push_back({model::site_from_scenario(s), s.id, s.nu, years});
    }
  }

  std::vector<model::SimOutput> outputs;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& job : jobs) {
    spdlog::info("simulating {} for {} years (N={})", job.id, job.years, config.population);
    model::SimRunInfo info;
    outputs.push_back(model::run_simulation(job.site, job.id, job.nu, job.years, config, &info));
    nlohmann::json annual = nlohmann::json::array();
    for (int y = 0; y < job.years; ++y) {
      const auto m = outputs.back().year_mean(y);
      annual.push_back(m ? nlohmann::json(*m) : nlohmann::json(nullptr));
    }
    runs.push_back({{"id", job.id},
                    {"years", job.years},
                    {"k0_scale", info.calibration.scale},
                    {"calibrated_eir", info.calibration.achieved_eir},
                    {"calibration_evaluations", info.calibration.evaluations},
                    {"warmup_eir", info.warmup_eir},
                    {"annual_eir", info.annual_eir},
                    {"annual_prevalence", annual},
                    {"clamp_events", info.clamp_events}});
    spdlog::info("{}: K0 scale {:.4g}, calibrated EIR {:.3f} (target {:.3f})", job.id, info.calibration.scale,
                 info.calibration.achieved_eir, job.site.eir0);
  }
  const fs::path out = o.out;
  fs::create_directories(out);
  io::write_file_atomic(out / "outputs.txt", io::serialize_sim_outputs(outputs));
  io::write_file_atomic(out / "runs.json", runs.dump(2) + "\n");
  record_run(out, cmd);
  spdlog::info("wrote {}", (out / "outputs.txt").string());
}

struct SampleOptions {
  int count = 1000;
  int years = 6;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double train_fraction = 0.8;
  bool log_eir = false;
  std::vector<std::string> historic;  // usage tables; switches to the historic benchmark
  std::string out;
  SimOptions sim;
};

void run_sample(const SampleOptions& o, const CLI::App& cmd) {
  const auto config = o.sim.resolve(o.seed);
  sampling::GenerateOptions gen;
  gen.train_fraction = o.train_fraction;
  gen.threads = o.threads;
  std::size_t last_logged = 0;
  gen.progress = [&](std::size_t done, std::size_t total) {
    if (done == total || done >= last_logged + std::max<std::size_t>(1, total / 20)) {
      last_logged = done;
      spdlog::info("simulated {}/{}", done, total);
    }
  };
  sampling::MarginOptions margins;
  margins.log_eir = o.log_eir;

  sampling::Dataset ds;
  if (o.historic.empty()) {
    ds = sampling::generate_dataset(o.count, o.years, config, o.seed, gen, margins);
  } else {
    std::vector<io::UsageTable> tables;
    for (const auto& path : o.historic) tables.push_back(io::load_usage(path));
    ds = sampling::historic_benchmark(o.count, o.years, tables, config, o.seed, gen, margins);
  }
  for (const auto& f : ds.failures) spdlog::warn("scenario {} failed: {}", f.id, f.message);
  sampling::save_dataset(o.out, ds);
  record_run(o.out, cmd);
  spdlog::info("wrote {} records ({} train, {} validation, {} failed) to {}, digest {}", ds.size(),
               ds.indices(sampling::Split::Train).size(), ds.indices(sampling::Split::Validation).size(),
               ds.failures.size(), o.out, ds.digest());
}

}  // namespace

void register_data_commands(CLI::App& app) {
  {
    auto o = std::make_shared<SimulateOptions>();
    auto* cmd = app.add_subcommand("simulate", "Run the individual-based simulator for a site or scenarios");
    auto* site = cmd->add_option("--site", o->site, "Site file")->check(CLI::ExistingFile);
    auto* scen = cmd->add_option("--scenario", o->scenario, "Scenario file (text or JSON)")->check(CLI::ExistingFile);
    site->excludes(scen);
    cmd->add_option("--years", o->years, "Simulated years (default: length of the usage sequence)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", o->seed, "Random seed")->capture_default_str();
    o->sim.add_to(*cmd);
    cmd->add_option("--out", o->out, "Output directory")->required();
    cmd->callback([o, cmd] {
      if (o->site.empty() && o->scenario.empty()) {
        throw ConfigError("simulate needs --site or --scenario");
      }
      run_simulate(*o, *cmd);
    });
  }
  {
    auto o = std::make_shared<SampleOptions>();
    auto* cmd = app.add_subcommand("sample", "Generate a training dataset by Latin hypercube sampling");
    cmd->add_option("--count", o->count, "Scenarios to simulate")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--years", o->years, "Years per scenario")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o->seed, "Design and simulation seed")->capture_default_str();
    cmd->add_option("--threads", o->threads, "Worker threads (0: all cores)")->capture_default_str();
    cmd->add_option("--train-fraction", o->train_fraction, "Share of records in the training split")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_flag("--log-eir", o->log_eir, "Sample baseline EIR log-uniformly");
    cmd->add_option("--historic", o->historic,
                    "Usage table(s); draw ITN usage from historic windows (all records become validation)")
        ->check(CLI::ExistingFile);
    o->sim.add_to(*cmd);
    cmd->add_option("--out", o->out, "Dataset directory")->required();
    cmd->callback([o, cmd] { run_sample(*o, *cmd); });
  }
}

}  // namespace msurr::cli
