#include "common.hpp"

#include "json.hpp"
#include "msurr/error.hpp"
#include "msurr/io/params_io.hpp"
#include "msurr/io/scenario_io.hpp"
#include "msurr/io/text.hpp"

namespace msurr::cli {

void SimOptions::add_to(CLI::App& app) {
  app.add_option("--population", population, "Simulated humans")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--warmup-years", warmup_years, "Nets-free burn-in before the recorded years")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--calibration-years", calibration_years, "Length of each K0 calibration run (last year measured)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--calibration-tolerance", calibration_tolerance, "Relative EIR tolerance of the calibration")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--params", params_file, "Global parameter file (defaults: built-in table)")
      ->check(CLI::ExistingFile);
}

model::SimConfig SimOptions::resolve(std::uint64_t seed) const {
  model::SimConfig c;
  if (!params_file.empty()) c.params = io::load_global_params(params_file);
  c.population = population;
  c.warmup_years = warmup_years;
  c.calibration_years = calibration_years;
  c.calibration_tolerance = calibration_tolerance;
  c.seed = seed;
  c.validate();
  return c;
}

void record_run(const fs::path& out, const CLI::App& command) {
  std::string text = "# msurr " + command.get_name() + " resolved configuration\n";
  text += "[" + command.get_name() + "]\n";
  text += command.config_to_str(true, false);
  io::write_file_atomic(out / "run.ini", text);
}

std::vector<model::ScenarioParams> load_scenario_file(const fs::path& path, int& years) {
  years = 0;
  const auto text = io::read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw FormatError(path.string() + ": empty scenario file");
  if (text[first] != '{' && text[first] != '[') return io::parse_scenarios(text, path.string());

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": malformed JSON: " + e.what());
  }
  std::vector<model::ScenarioParams> out;
  auto one = [&](const nlohmann::json& item) {
    const nlohmann::json* scenario = &item;
    if (item.is_object() && item.contains("scenario")) {
      scenario = &item["scenario"];
      if (item.contains("years")) {
        if (!item["years"].is_number_integer()) throw FormatError(path.string() + ": years must be an integer");
        years = item["years"].get<int>();
      }
    }
    std::vector<model::FieldError> errors;
    auto s = io::scenario_from_json(scenario->dump(), errors);
    if (!errors.empty()) {
      throw ConfigError(path.string() + ": " + errors.front().field + " " + errors.front().message);
    }
    if (s.id.empty()) s.id = "s" + std::to_string(out.size());
    out.push_back(std::move(s));
  };
  if (j.is_array()) {
    for (const auto& item : j) one(item);
  } else {
    one(j);
  }
  if (out.empty()) throw FormatError(path.string() + ": no scenarios");
  return out;
}

}  // namespace msurr::cli
