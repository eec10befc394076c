#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msurr/model/simulation.hpp"

namespace msurr::cli {

namespace fs = std::filesystem;

/// Simulator settings shared by simulate, sample and infer --recalibrate.
struct SimOptions {
  std::size_t population = 2000;
  int warmup_years = 3;
  int calibration_years = 2;
  double calibration_tolerance = 0.02;
  std::string params_file;  // global parameter file; built-in defaults when empty

  void add_to(CLI::App& app);
  model::SimConfig resolve(std::uint64_t seed) const;
};

/// Write the subcommand's fully resolved options (defaults included) to
/// `<out>/run.ini`, in the same format --config reads back.
void record_run(const fs::path& out, const CLI::App& command);

/// Scenarios from a scenario text file, a JSON scenario, a JSON predict
/// request {scenario, years} or a JSON array of either. `years` receives
/// the request's horizon when the file states one (0 otherwise).
std::vector<model::ScenarioParams> load_scenario_file(const fs::path& path, int& years);

void register_data_commands(CLI::App& app);
void register_model_commands(CLI::App& app);
void register_infer_commands(CLI::App& app);

}  // namespace msurr::cli
