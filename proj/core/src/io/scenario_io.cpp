#include "msurr/io/scenario_io.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"
#include "msurr/error.hpp"
#include "msurr/io/text.hpp"

namespace msurr::io {
namespace {

using model::ScenarioParams;

void finish_block(ScenarioParams& s, std::set<std::string>& seen, const std::string& where,
                  std::vector<ScenarioParams>& out) {
  static const char* required[] = {"eir0", "mean_age_years", "g0", "g1", "g2", "g3", "h1",
                                   "h2", "h3", "kappa1", "kappa2", "kappa3"};
  for (const char* key : required) {
    if (!seen.count(key)) throw FormatError(where + ": scenario '" + s.id + "' is missing '" + key + "'");
  }
  const auto errors = model::scenario_field_errors(s);
  if (!errors.empty()) {
    throw ConfigError(where + ": scenario '" + s.id + "': " + errors.front().field + " " + errors.front().message);
  }
  out.push_back(std::move(s));
  s = ScenarioParams{};
  seen.clear();
}

}  // namespace

std::vector<ScenarioParams> parse_scenarios(std::string_view text, std::string_view source) {
  const auto first_nl = text.find('\n');
  if (trim(text.substr(0, first_nl)) != kScenarioHeader) {
    throw FormatError(std::string(source) + ": missing header '" + std::string(kScenarioHeader) + "'");
  }
  std::vector<ScenarioParams> out;
  ScenarioParams current;
  std::set<std::string> seen;
  bool open = false;
  std::string block_where;
  for (const auto& kv : parse_key_values(text, source)) {
    const std::string at = std::string(source) + ":" + std::to_string(kv.line);
    if (kv.key == "[") {
      if (open) finish_block(current, seen, block_where, out);
      const auto parts = split_ws(kv.value);
      if (parts.size() != 2 || parts[0] != "scenario") throw FormatError(at + ": expected '[scenario <id>]'");
      current.id = std::string(parts[1]);
      current.nu.clear();
      open = true;
      block_where = at;
      continue;
    }
    if (!open) throw FormatError(at + ": key outside a [scenario] block");
    if (!seen.insert(kv.key).second) throw FormatError(at + ": duplicate key '" + kv.key + "'");
    const std::string ctx = at + " (" + kv.key + ")";
    if (kv.key == "eir0") {
      current.eir0 = parse_double(kv.value, ctx);
    } else if (kv.key == "mean_age_years") {
      current.mean_age_years = parse_double(kv.value, ctx);
    } else if (kv.key == "g0") {
      current.rainfall.g0 = parse_double(kv.value, ctx);
    } else if (kv.key.size() == 2 && (kv.key[0] == 'g' || kv.key[0] == 'h') && kv.key[1] >= '1' && kv.key[1] <= '3') {
      auto& arr = kv.key[0] == 'g' ? current.rainfall.g : current.rainfall.h;
      arr[kv.key[1] - '1'] = parse_double(kv.value, ctx);
    } else if (kv.key.rfind("kappa", 0) == 0 && kv.key.size() == 6 && kv.key[5] >= '1' && kv.key[5] <= '3') {
      current.kappa[kv.key[5] - '1'] = parse_double(kv.value, ctx);
    } else if (kv.key == "nu") {
      if (!trim(kv.value).empty()) {
        for (auto tok : split(kv.value, ',')) current.nu.push_back(parse_double(tok, ctx));
      }
    } else {
      throw FormatError(at + ": unknown key '" + kv.key + "'");
    }
  }
  if (open) finish_block(current, seen, block_where, out);
  return out;
}

std::vector<ScenarioParams> load_scenarios(const std::filesystem::path& path) {
  return parse_scenarios(read_file(path), path.string());
}

std::string serialize_scenarios(const std::vector<ScenarioParams>& scenarios) {
  std::ostringstream os;
  os << kScenarioHeader << "\n";
  for (const auto& s : scenarios) {
    if (s.id.empty() || s.id.find_first_of(" \t]#") != std::string::npos) {
      throw ConfigError("scenario id must be non-empty without spaces, '#' or ']'");
    }
    os << "\n[scenario " << s.id << "]\n";
    os << "eir0 = " << format_double(s.eir0) << "\n";
    os << "mean_age_years = " << format_double(s.mean_age_years) << "\n";
    os << "g0 = " << format_double(s.rainfall.g0) << "\n";
    for (int i = 0; i < 3; ++i) os << "g" << i + 1 << " = " << format_double(s.rainfall.g[i]) << "\n";
    for (int i = 0; i < 3; ++i) os << "h" << i + 1 << " = " << format_double(s.rainfall.h[i]) << "\n";
    for (int v = 0; v < 3; ++v) os << "kappa" << v + 1 << " = " << format_double(s.kappa[v]) << "\n";
    os << "nu = ";
    for (std::size_t t = 0; t < s.nu.size(); ++t) os << (t ? ", " : "") << format_double(s.nu[t]);
    os << "\n";
  }
  return os.str();
}

ScenarioParams scenario_from_json(std::string_view json, std::vector<model::FieldError>& errors) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  ScenarioParams s;
  if (!j.is_object()) {
    errors.push_back({"", "expected a JSON object"});
    return s;
  }
  auto number = [&](const nlohmann::json& v, const std::string& field, double& out) {
    if (!v.is_number()) {
      errors.push_back({field, "must be a number"});
      return;
    }
    out = v.get<double>();
  };
  auto scalar = [&](const char* key, double& out) {
    if (!j.contains(key)) {
      errors.push_back({key, "is required"});
      return;
    }
    number(j[key], key, out);
  };
  auto fixed = [&](const char* key, std::size_t n, auto&& assign) {
    if (!j.contains(key)) {
      errors.push_back({key, "is required"});
      return;
    }
    const auto& arr = j[key];
    if (!arr.is_array() || arr.size() != n) {
      errors.push_back({key, "must be an array of " + std::to_string(n) + " numbers"});
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double x = 0.0;
      number(arr[i], std::string(key) + "[" + std::to_string(i) + "]", x);
      assign(i, x);
    }
  };
  if (j.contains("id")) {
    if (j["id"].is_string()) {
      s.id = j["id"].get<std::string>();
    } else {
      errors.push_back({"id", "must be a string"});
    }
  }
  scalar("eir0", s.eir0);
  scalar("mean_age_years", s.mean_age_years);
  fixed("g", 4, [&](std::size_t i, double x) { (i == 0 ? s.rainfall.g0 : s.rainfall.g[i - 1]) = x; });
  fixed("h", 3, [&](std::size_t i, double x) { s.rainfall.h[i] = x; });
  fixed("kappa", 3, [&](std::size_t i, double x) { s.kappa[i] = x; });
  if (j.contains("nu")) {
    const auto& arr = j["nu"];
    if (!arr.is_array()) {
      errors.push_back({"nu", "must be an array of numbers"});
    } else {
      s.nu.resize(arr.size());
      for (std::size_t i = 0; i < arr.size(); ++i) number(arr[i], "nu[" + std::to_string(i) + "]", s.nu[i]);
    }
  }
  if (errors.empty()) {
    for (auto& e : model::scenario_field_errors(s)) errors.push_back(std::move(e));
  }
  return s;
}

std::string scenario_to_json(const ScenarioParams& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["eir0"] = s.eir0;
  j["mean_age_years"] = s.mean_age_years;
  j["g"] = {s.rainfall.g0, s.rainfall.g[0], s.rainfall.g[1], s.rainfall.g[2]};
  j["h"] = {s.rainfall.h[0], s.rainfall.h[1], s.rainfall.h[2]};
  j["kappa"] = {s.kappa[0], s.kappa[1], s.kappa[2]};
  j["nu"] = s.nu;
  return j.dump();
}

std::vector<model::SimOutput> parse_sim_outputs(std::string_view text, std::string_view source) {
  std::vector<model::SimOutput> out;
  int line_no = 0;
  bool header = false;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!header) {
      if (trim(line) != kSimOutputHeader) {
        throw FormatError(std::string(source) + ": missing header '" + std::string(kSimOutputHeader) + "'");
      }
      header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    const std::string at = std::string(source) + ":" + std::to_string(line_no);
    const auto cols = split(line, '\t');
    if (cols.size() != 4) throw FormatError(at + ": expected 4 tab-separated columns");
    model::SimOutput o;
    o.id = std::string(cols[0]);
    o.seed = parse_u64(cols[1], at);
    o.years = static_cast<int>(parse_int(cols[2], at));
    if (o.years < 0) throw FormatError(at + ": negative year count");
    const auto values = split_ws(cols[3]);
    if (values.size() != static_cast<std::size_t>(o.years) * model::kDaysPerYear) {
      throw FormatError(at + ": expected " + std::to_string(o.years * model::kDaysPerYear) + " values");
    }
    o.prevalence.reserve(values.size());
    for (auto v : values) {
      const double x = parse_double(v, at);
      if (!std::isnan(x) && !(x >= 0.0 && x <= 1.0)) throw FormatError(at + ": prevalence outside [0, 1]");
      o.prevalence.push_back(x);
    }
    out.push_back(std::move(o));
  }
  if (!header) throw FormatError(std::string(source) + ": empty outputs file");
  return out;
}

std::string serialize_sim_outputs(const std::vector<model::SimOutput>& outputs) {
  std::string s(kSimOutputHeader);
  s += '\n';
  for (const auto& o : outputs) {
    s += o.id;
    s += '\t';
    s += std::to_string(o.seed);
    s += '\t';
    s += std::to_string(o.years);
    s += '\t';
    for (std::size_t i = 0; i < o.prevalence.size(); ++i) {
      if (i) s += ' ';
      s += format_double(o.prevalence[i]);
    }
    s += '\n';
  }
  return s;
}

}  // namespace msurr::io
