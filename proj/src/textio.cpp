#include "fseval/textio.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fseval/error.hpp"

namespace fseval {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_fixed(double v, int prec) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

double parse_double(std::string_view s, const std::string& context) {
  std::string tmp(s);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || tmp.empty() || errno == ERANGE)
    throw ConfigError("invalid number '" + tmp + "' in " + context);
  return v;
}

long long parse_int(std::string_view s, const std::string& context) {
  std::string tmp(s);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(tmp.c_str(), &end, 10);
  if (end != tmp.c_str() + tmp.size() || tmp.empty() || errno == ERANGE)
    throw ConfigError("invalid integer '" + tmp + "' in " + context);
  return v;
}

std::uint64_t parse_u64(std::string_view s, const std::string& context) {
  std::string tmp(s);
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(tmp.c_str(), &end, 10);
  if (end != tmp.c_str() + tmp.size() || tmp.empty() || errno == ERANGE)
    throw ConfigError("invalid unsigned integer '" + tmp + "' in " + context);
  return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

const std::string* Record::find(std::string_view key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return &v;
  return nullptr;
}

const std::string& Record::get(std::string_view key, const std::string& ctx) const {
  const std::string* v = find(key);
  if (!v) throw ConfigError("missing field '" + std::string(key) + "' in " + ctx);
  return *v;
}

std::string format_record(const Record& r) {
  std::string line = r.kind;
  for (const auto& [k, v] : r.fields) {
    line += '\t';
    line += k;
    line += '=';
    line += v;
  }
  return line;
}

Record parse_record(std::string_view line, int line_number) {
  Record r;
  const auto tokens = split(line, '\t');
  if (tokens.empty() || tokens[0].empty())
    throw ConfigError("line " + std::to_string(line_number) + ": empty record");
  r.kind = tokens[0];
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const std::size_t eq = tokens[i].find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_number) +
                        ": malformed field '" + tokens[i] + "'");
    r.fields.emplace_back(tokens[i].substr(0, eq), tokens[i].substr(eq + 1));
  }
  return r;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write file: " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace fseval
