#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "msurr/model/params.hpp"
#include "msurr/model/simulation.hpp"

namespace msurr::io {

inline constexpr std::string_view kScenarioHeader = "# msurr-scenarios v1";
inline constexpr std::string_view kSimOutputHeader = "# msurr-simoutput v1";

/// Scenario file: the versioned header line, then one block per scenario:
///
///   [scenario <id>]
///   eir0 = 23.2
///   mean_age_years = 18.5
///   g0 = ... g1..g3, h1..h3
///   kappa1 = ... kappa2, kappa3
///   nu = 0.1, 0.2, 0.2
///
/// Every scenario is validated against the input-domain bounds.
std::vector<model::ScenarioParams> parse_scenarios(std::string_view text, std::string_view source = "scenarios");
std::vector<model::ScenarioParams> load_scenarios(const std::filesystem::path& path);
std::string serialize_scenarios(const std::vector<model::ScenarioParams>& scenarios);

/// JSON object {id?, eir0, mean_age_years, g:[g0..g3], h:[h1..h3],
/// kappa:[3], nu:[...]} to a scenario. Missing or mistyped fields and bound
/// violations are collected into `errors` (the returned scenario is then
/// unspecified); malformed JSON throws FormatError.
model::ScenarioParams scenario_from_json(std::string_view json, std::vector<model::FieldError>& errors);
std::string scenario_to_json(const model::ScenarioParams& s);

/// Simulation outputs, one line per record after the header:
/// `id <TAB> seed <TAB> years <TAB> v_1 v_2 ... v_{years*365}` with NA for
/// missing values.
std::vector<model::SimOutput> parse_sim_outputs(std::string_view text, std::string_view source = "outputs");
std::string serialize_sim_outputs(const std::vector<model::SimOutput>& outputs);

}  // namespace msurr::io
