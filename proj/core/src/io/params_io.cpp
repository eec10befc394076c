#include "msurr/io/params_io.hpp"

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "msurr/error.hpp"
#include "msurr/io/text.hpp"
#include "msurr/io/usage.hpp"

namespace msurr::io {
namespace {

using model::GlobalParams;

struct DoubleField {
  const char* name;
  double GlobalParams::*member;
};

// Order follows the parameter table.
constexpr std::array<DoubleField, 49> kGlobalFields{{
    {"dd", &GlobalParams::dd},
    {"dt", &GlobalParams::dt},
    {"da", &GlobalParams::da},
    {"du", &GlobalParams::du},
    {"del", &GlobalParams::del},
    {"dl", &GlobalParams::dl},
    {"dpl", &GlobalParams::dpl},
    {"mup", &GlobalParams::mup},
    {"mum", &GlobalParams::mum},
    {"rm", &GlobalParams::rm},
    {"rb", &GlobalParams::rb},
    {"rc", &GlobalParams::rc},
    {"rid", &GlobalParams::rid},
    {"b0", &GlobalParams::b0},
    {"b1", &GlobalParams::b1},
    {"ib0", &GlobalParams::ib0},
    {"kb", &GlobalParams::kb},
    {"phi0", &GlobalParams::phi0},
    {"phi1", &GlobalParams::phi1},
    {"ic0", &GlobalParams::ic0},
    {"kc", &GlobalParams::kc},
    {"fd0", &GlobalParams::fd0},
    {"ad", &GlobalParams::ad},
    {"gammad", &GlobalParams::gammad},
    {"d1", &GlobalParams::d1},
    {"id0", &GlobalParams::id0},
    {"kd", &GlobalParams::kd},
    {"ub", &GlobalParams::ub},
    {"uc", &GlobalParams::uc},
    {"ud", &GlobalParams::ud},
    {"cd", &GlobalParams::cd},
    {"gamma1", &GlobalParams::gamma1},
    {"cu", &GlobalParams::cu},
    {"ct", &GlobalParams::ct},
    {"a0", &GlobalParams::a0},
    {"rho", &GlobalParams::rho},
    {"sigma2", &GlobalParams::sigma2},
    {"pcm", &GlobalParams::pcm},
    {"me", &GlobalParams::me},
    {"ml", &GlobalParams::ml},
    {"gamma", &GlobalParams::gamma},
    {"de", &GlobalParams::de},
    {"delay_gam", &GlobalParams::delay_gam},
    {"dem", &GlobalParams::dem},
    {"beta", &GlobalParams::beta},
    {"foraging_time", &GlobalParams::foraging_time},
    {"f_t", &GlobalParams::f_t},
    {"net_half_life_years", &GlobalParams::net_half_life_years},
    {"net_retention_years", &GlobalParams::net_retention_years},
}};

const std::set<std::string> kTabulatedOnly{"rvm", "rva", "uv"};

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw FormatError(where + ": expected true or false");
}

std::string where(std::string_view source, int line) { return std::string(source) + ":" + std::to_string(line); }

}  // namespace

model::GlobalParams parse_global_params(std::string_view text, std::string_view source,
                                        std::vector<std::string>* ignored) {
  GlobalParams p;
  std::set<std::string> seen;
  for (const auto& kv : parse_key_values(text, source)) {
    const std::string at = where(source, kv.line);
    if (kv.key == "[") throw FormatError(at + ": sections are not allowed in a parameter file");
    if (!seen.insert(kv.key).second) throw FormatError(at + ": duplicate key '" + kv.key + "'");
    if (kTabulatedOnly.count(kv.key)) {
      parse_double(kv.value, at);
      if (ignored) ignored->push_back(kv.key);
      continue;
    }
    if (kv.key == "gametocyte_lag") {
      p.gametocyte_lag = parse_bool(kv.value, at);
      continue;
    }
    if (kv.key == "mosquito_substeps") {
      p.mosquito_substeps = static_cast<int>(parse_int(kv.value, at));
      continue;
    }
    bool known = false;
    for (const auto& f : kGlobalFields) {
      if (kv.key == f.name) {
        p.*f.member = parse_double(kv.value, at + " (" + kv.key + ")");
        known = true;
        break;
      }
    }
    if (!known) throw FormatError(at + ": unknown parameter '" + kv.key + "'");
  }
  p.validate();
  return p;
}

model::GlobalParams load_global_params(const std::filesystem::path& path, std::vector<std::string>* ignored) {
  return parse_global_params(read_file(path), path.string(), ignored);
}

std::string serialize_global_params(const model::GlobalParams& p) {
  std::ostringstream os;
  os << "# msurr global parameters\n";
  for (const auto& f : kGlobalFields) os << f.name << " = " << format_double(p.*f.member) << "\n";
  os << "gametocyte_lag = " << (p.gametocyte_lag ? "true" : "false") << "\n";
  os << "mosquito_substeps = " << p.mosquito_substeps << "\n";
  return os.str();
}

model::SiteParams parse_site(std::string_view text, std::string_view source, const std::filesystem::path& base_dir) {
  model::SiteParams site;
  std::map<std::string, std::pair<std::string, int>> values;
  for (const auto& kv : parse_key_values(text, source)) {
    const std::string at = where(source, kv.line);
    if (kv.key == "[") throw FormatError(at + ": sections are not allowed in a site file");
    if (!values.emplace(kv.key, std::make_pair(kv.value, kv.line)).second) {
      throw FormatError(at + ": duplicate key '" + kv.key + "'");
    }
  }
  std::set<std::string> used;
  auto take = [&](const std::string& key) -> const std::pair<std::string, int>* {
    const auto it = values.find(key);
    if (it == values.end()) return nullptr;
    used.insert(key);
    return &it->second;
  };
  auto number = [&](const std::string& key, bool required, double fallback) {
    const auto* v = take(key);
    if (!v) {
      if (required) throw FormatError(std::string(source) + ": missing field '" + key + "'");
      return fallback;
    }
    return parse_double(v->first, where(source, v->second) + " (" + key + ")");
  };

  if (const auto* v = take("name")) site.name = v->first;
  site.rainfall.g0 = number("g0", true, 0.0);
  for (int i = 0; i < 3; ++i) {
    site.rainfall.g[i] = number("g" + std::to_string(i + 1), true, 0.0);
    site.rainfall.h[i] = number("h" + std::to_string(i + 1), true, 0.0);
  }
  double kappa_sum = 0.0;
  for (int v = 0; v < model::kSpecies; ++v) {
    site.kappa[v] = number("kappa" + std::to_string(v + 1), true, 0.0);
    kappa_sum += site.kappa[v];
  }
  if (!(std::fabs(kappa_sum - 1.0) <= model::ScenarioBounds::simplex_tolerance)) {
    std::ostringstream os;
    os << source << ": kappa must sum to 1 (sum " << kappa_sum << ")";
    throw ConfigError(os.str());
  }
  for (auto& k : site.kappa) k /= kappa_sum;
  site.mean_age_years = number("mean_age_years", true, 0.0);
  site.eir0 = number("eir0", false, site.eir0);
  for (int v = 0; v < model::kSpecies; ++v) {
    const std::string n = std::to_string(v + 1);
    auto& sp = site.species[v];
    sp.alpha = number("alpha" + n, false, sp.alpha);
    sp.phi_bednet = number("phi_bednet" + n, false, sp.phi_bednet);
    sp.s_net = number("s_net" + n, false, sp.s_net);
    sp.r_net = number("r_net" + n, false, sp.r_net);
  }
  if (const auto* v = take("first_usage_year")) {
    site.first_usage_year = static_cast<int>(parse_int(v->first, where(source, v->second)));
  }
  const auto* inline_usage = take("itn_usage");
  const auto* usage_file = take("usage_file");
  if (inline_usage && usage_file) throw FormatError(std::string(source) + ": give itn_usage or usage_file, not both");
  if (inline_usage && !trim(inline_usage->first).empty()) {
    for (auto tok : split(inline_usage->first, ',')) {
      site.itn_usage.push_back(parse_double(tok, where(source, inline_usage->second) + " (itn_usage)"));
    }
  }
  if (usage_file) {
    const auto table = load_usage(base_dir / usage_file->first);
    site.itn_usage = table.usage;
    site.first_usage_year = table.first_year;
  }
  for (const auto& [key, value] : values) {
    if (!used.count(key)) throw FormatError(where(source, value.second) + ": unknown field '" + key + "'");
  }
  site.validate();
  return site;
}

model::SiteParams load_site(const std::filesystem::path& path) {
  return parse_site(read_file(path), path.string(), path.parent_path());
}

std::string serialize_site(const model::SiteParams& site) {
  std::ostringstream os;
  os << "# msurr site\n";
  if (!site.name.empty()) os << "name = " << site.name << "\n";
  os << "g0 = " << format_double(site.rainfall.g0) << "\n";
  for (int i = 0; i < 3; ++i) os << "g" << i + 1 << " = " << format_double(site.rainfall.g[i]) << "\n";
  for (int i = 0; i < 3; ++i) os << "h" << i + 1 << " = " << format_double(site.rainfall.h[i]) << "\n";
  for (int v = 0; v < model::kSpecies; ++v) os << "kappa" << v + 1 << " = " << format_double(site.kappa[v]) << "\n";
  os << "mean_age_years = " << format_double(site.mean_age_years) << "\n";
  os << "eir0 = " << format_double(site.eir0) << "\n";
  for (int v = 0; v < model::kSpecies; ++v) {
    const auto& sp = site.species[v];
    os << "alpha" << v + 1 << " = " << format_double(sp.alpha) << "\n";
    os << "phi_bednet" << v + 1 << " = " << format_double(sp.phi_bednet) << "\n";
    os << "s_net" << v + 1 << " = " << format_double(sp.s_net) << "\n";
    os << "r_net" << v + 1 << " = " << format_double(sp.r_net) << "\n";
  }
  if (site.first_usage_year != 0) os << "first_usage_year = " << site.first_usage_year << "\n";
  if (!site.itn_usage.empty()) {
    os << "itn_usage = ";
    for (std::size_t t = 0; t < site.itn_usage.size(); ++t) {
      os << (t ? ", " : "") << format_double(site.itn_usage[t]);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace msurr::io
