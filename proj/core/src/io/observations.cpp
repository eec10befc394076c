#include "msurr/io/observations.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msurr/error.hpp"
#include "msurr/io/text.hpp"

namespace msurr::io {

int ObservationSet::first_year() const {
  if (records.empty()) throw ConfigError("empty observation set");
  return std::min_element(records.begin(), records.end(), [](auto& a, auto& b) { return a.year < b.year; })->year;
}

int ObservationSet::last_year() const {
  if (records.empty()) throw ConfigError("empty observation set");
  return std::max_element(records.begin(), records.end(), [](auto& a, auto& b) { return a.year < b.year; })->year;
}

ObservationSet parse_observations(std::string_view text, std::string_view source) {
  ObservationSet obs;
  bool header = false;
  bool has_prevalence = false;
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::string at = std::string(source) + ":" + std::to_string(line_no);
    const auto cols = split(line, ',');
    if (!header) {
      std::vector<std::string> names;
      for (auto c : cols) names.emplace_back(trim(c));
      const std::vector<std::string> base{"year", "month", "negative", "positive"};
      const bool four = names == base;
      auto with_prev = base;
      with_prev.push_back("prevalence");
      has_prevalence = names == with_prev;
      if (!four && !has_prevalence) throw FormatError(at + ": expected header 'year,month,negative,positive'");
      header = true;
      continue;
    }
    if (cols.size() != (has_prevalence ? 5u : 4u)) throw FormatError(at + ": wrong number of columns");
    ObservationRecord r;
    r.year = static_cast<int>(parse_int(cols[0], at));
    r.month = static_cast<int>(parse_int(cols[1], at));
    r.negative = parse_double(cols[2], at);
    r.positive = parse_double(cols[3], at);
    if (r.month < 1 || r.month > 12) throw ConfigError(at + ": month must lie in 1..12");
    if (!(r.negative >= 0.0) || !(r.positive >= 0.0)) throw ConfigError(at + ": counts must be non-negative");
    if (r.negative + r.positive <= 0.0) throw ConfigError(at + ": counts must not both be zero");
    if (has_prevalence) {
      const double given = parse_double(cols[4], at);
      if (std::fabs(given - r.prevalence()) > kPrevalenceCrossCheck) {
        std::ostringstream os;
        os << at << ": prevalence " << given << " disagrees with counts (" << r.prevalence() << ")";
        throw ConfigError(os.str());
      }
    }
    obs.records.push_back(r);
  }
  if (!header) throw FormatError(std::string(source) + ": empty observations file");
  return obs;
}

ObservationSet load_observations(const std::filesystem::path& path) {
  auto obs = parse_observations(read_file(path), path.string());
  obs.site = path.stem().string();
  return obs;
}

std::string serialize_observations(const ObservationSet& obs) {
  std::ostringstream os;
  os << "year,month,negative,positive,prevalence\n";
  for (const auto& r : obs.records) {
    os << r.year << "," << r.month << "," << format_double(r.negative) << "," << format_double(r.positive) << ","
       << format_double(r.prevalence()) << "\n";
  }
  return os.str();
}

}  // namespace msurr::io
