#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace msurr::io {

/// Yearly ITN usage, contiguous from `first_year`.
struct UsageTable {
  int first_year = 0;
  std::vector<double> usage;

  int last_year() const { return first_year + static_cast<int>(usage.size()) - 1; }
  /// Throws ConfigError for years outside the table.
  double at(int year) const;
  /// `n` consecutive values starting at `year`, holding the last value past
  /// the end of the table.
  std::vector<double> window(int year, int n) const;
};

/// CSV with header `year,usage`; years must be contiguous and increasing,
/// usage in [0, 1].
UsageTable parse_usage(std::string_view text, std::string_view source = "usage");
UsageTable load_usage(const std::filesystem::path& path);
std::string serialize_usage(const UsageTable& table);

}  // namespace msurr::io
