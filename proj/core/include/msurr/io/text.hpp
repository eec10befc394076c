#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace msurr::io {

/// Shortest decimal that parses back to the same double ("NA" for NaN).
std::string format_double(double x);

/// Strict parse of a whole token; throws FormatError mentioning `context`.
double parse_double(std::string_view token, std::string_view context);
std::int64_t parse_int(std::string_view token, std::string_view context);
std::uint64_t parse_u64(std::string_view token, std::string_view context);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
/// Split on runs of spaces/tabs.
std::vector<std::string_view> split_ws(std::string_view s);

/// One `key = value` line of a key/value file.
struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Parse `key = value` lines; '#' starts a comment, blank lines are ignored.
/// Lines of the form `[section name]` are returned with key "[" and the
/// section text as value. Throws FormatError on malformed lines.
std::vector<KeyValue> parse_key_values(std::string_view text, std::string_view source);

std::string read_file(const std::filesystem::path& path);

/// Write via a temporary sibling and rename, so readers never observe a
/// partially written file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// 64-bit FNV-1a, used for dataset and checkpoint digests.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t x);

}  // namespace msurr::io
