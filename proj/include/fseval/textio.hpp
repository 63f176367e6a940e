#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fseval {

// Formatting helpers shared by every file format the tool writes. All logs
// and summaries print doubles with format_double so that parse(format(x))
// round-trips bit-exactly; reports meant for humans use the fixed-precision
// helpers.

std::string format_double(double v);        // %.17g, round-trip exact
std::string format_fixed(double v, int prec);
double parse_double(std::string_view s, const std::string& context);
long long parse_int(std::string_view s, const std::string& context);
std::uint64_t parse_u64(std::string_view s, const std::string& context);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

// One "key=value" token list, tab-separated; the line format of run logs.
struct Record {
  std::string kind;  // first token
  std::vector<std::pair<std::string, std::string>> fields;

  const std::string* find(std::string_view key) const;
  const std::string& get(std::string_view key, const std::string& ctx) const;
};

std::string format_record(const Record& r);
Record parse_record(std::string_view line, int line_number);

// Reads a whole file; throws ConfigError if it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace fseval
