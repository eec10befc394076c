#include "msurr/io/usage.hpp"

#include <algorithm>
#include <sstream>

#include "msurr/error.hpp"
#include "msurr/io/text.hpp"

namespace msurr::io {

double UsageTable::at(int year) const {
  if (year < first_year || year > last_year()) {
    throw ConfigError("no ITN usage for year " + std::to_string(year));
  }
  return usage[static_cast<std::size_t>(year - first_year)];
}

std::vector<double> UsageTable::window(int year, int n) const {
  if (usage.empty()) throw ConfigError("empty usage table");
  if (year < first_year) throw ConfigError("no ITN usage for year " + std::to_string(year));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) out.push_back(at(std::min(year + i, last_year())));
  return out;
}

UsageTable parse_usage(std::string_view text, std::string_view source) {
  UsageTable table;
  bool header = false;
  int line_no = 0;
  int expected = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::string at = std::string(source) + ":" + std::to_string(line_no);
    const auto cols = split(line, ',');
    if (!header) {
      if (cols.size() != 2 || trim(cols[0]) != "year" || trim(cols[1]) != "usage") {
        throw FormatError(at + ": expected header 'year,usage'");
      }
      header = true;
      continue;
    }
    if (cols.size() != 2) throw FormatError(at + ": expected 2 columns");
    const int year = static_cast<int>(parse_int(cols[0], at));
    const double usage = parse_double(cols[1], at);
    if (!(usage >= 0.0 && usage <= 1.0)) throw ConfigError(at + ": usage must lie in [0, 1]");
    if (table.usage.empty()) {
      table.first_year = year;
    } else if (year != expected) {
      throw ConfigError(at + ": gap in years (expected " + std::to_string(expected) + ", got " +
                        std::to_string(year) + ")");
    }
    expected = year + 1;
    table.usage.push_back(usage);
  }
  if (!header) throw FormatError(std::string(source) + ": empty usage file");
  if (table.usage.empty()) throw FormatError(std::string(source) + ": no usage rows");
  return table;
}

UsageTable load_usage(const std::filesystem::path& path) { return parse_usage(read_file(path), path.string()); }

std::string serialize_usage(const UsageTable& table) {
  std::ostringstream os;
  os << "year,usage\n";
  for (std::size_t i = 0; i < table.usage.size(); ++i) {
    os << table.first_year + static_cast<int>(i) << "," << format_double(table.usage[i]) << "\n";
  }
  return os.str();
}

}  // namespace msurr::io
