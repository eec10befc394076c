#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "msurr/model/params.hpp"

namespace msurr::io {

/// Global biological parameters as `key = value` lines named as in the
/// parameter table. Keys the model tabulates but does not use (severe
/// disease: rvm, rva, uv) are accepted and reported through `ignored`.
model::GlobalParams parse_global_params(std::string_view text, std::string_view source = "params",
                                        std::vector<std::string>* ignored = nullptr);
model::GlobalParams load_global_params(const std::filesystem::path& path, std::vector<std::string>* ignored = nullptr);
std::string serialize_global_params(const model::GlobalParams& p);

/// Site description. Required: g0..g3, h1..h3, kappa1..kappa3,
/// mean_age_years. Optional: name, eir0, per-species alphaV / phi_bednetV /
/// s_netV / r_netV, itn_usage (comma list), first_usage_year, usage_file
/// (CSV path relative to the site file). kappa is renormalized when its sum
/// is within 1e-6 of one.
model::SiteParams parse_site(std::string_view text, std::string_view source = "site",
                             const std::filesystem::path& base_dir = {});
model::SiteParams load_site(const std::filesystem::path& path);
std::string serialize_site(const model::SiteParams& site);

}  // namespace msurr::io
