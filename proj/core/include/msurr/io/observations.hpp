#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace msurr::io {

/// Monthly aggregated diagnostic results; counts are population-weighted and
/// therefore real-valued.
struct ObservationRecord {
  int year = 0;
  int month = 0;  // 1..12
  double negative = 0.0;
  double positive = 0.0;

  double prevalence() const { return positive / (positive + negative); }
};

struct ObservationSet {
  std::string site;
  std::vector<ObservationRecord> records;

  int first_year() const;
  int last_year() const;
};

/// Maximum allowed difference between a provided prevalence column and the
/// recomputed positive / (positive + negative).
inline constexpr double kPrevalenceCrossCheck = 1e-5;

/// CSV with header `year,month,negative,positive` and an optional fifth
/// `prevalence` column that is cross-checked.
ObservationSet parse_observations(std::string_view text, std::string_view source = "observations");
ObservationSet load_observations(const std::filesystem::path& path);
/// Writes the four-column form plus the derived prevalence.
std::string serialize_observations(const ObservationSet& obs);

}  // namespace msurr::io
