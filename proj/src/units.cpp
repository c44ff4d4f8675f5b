#include "sdpsim/units.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include "sdpsim/errors.hpp"

namespace sdpsim {

namespace {

const std::map<std::string, double>& unit_table() {
  static const std::map<std::string, double> table = {
      {"", 1.0},
      {"B", 1.0},
      {"KB", 1e3},
      {"MB", 1e6},
      {"GB", 1e9},
      {"TB", 1e12},
      {"KiB", 1024.0},
      {"MiB", 1024.0 * 1024},
      {"GiB", 1024.0 * 1024 * 1024},
      {"TiB", 1024.0 * 1024 * 1024 * 1024},
      {"s", 1.0},
      {"ms", 1e-3},
      {"us", 1e-6},
      {"ns", 1e-9},
      {"FLOPS", 1.0},
      {"KFLOPS", 1e3},
      {"MFLOPS", 1e6},
      {"GFLOPS", 1e9},
      {"TFLOPS", 1e12},
      {"PFLOPS", 1e15},
  };
  return table;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

double parse_quantity(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) raise(Errc::ConfigError, "empty value");
  char* end = nullptr;
  const double value = std::strtod(t.c_str(), &end);
  if (end == t.c_str())
    raise(Errc::ConfigError, "not a number: '" + t + "'");
  std::string unit = trim(std::string(end));
  // Rates: strip a trailing "/s" ("GB/s", "FLOP/s").
  if (unit.size() >= 2 && unit.substr(unit.size() - 2) == "/s")
    unit = unit.substr(0, unit.size() - 2);
  if (unit == "FLOP") unit = "FLOPS";
  auto it = unit_table().find(unit);
  if (it == unit_table().end())
    raise(Errc::ConfigError, "unknown unit '" + unit + "' in '" + t + "'");
  return value * it->second;
}

std::string format_bytes(double bytes) {
  char buf[64];
  if (bytes >= 1e12)
    std::snprintf(buf, sizeof buf, "%.3f TB", bytes / 1e12);
  else if (bytes >= 1e9)
    std::snprintf(buf, sizeof buf, "%.3f GB", bytes / 1e9);
  else if (bytes >= 1e6)
    std::snprintf(buf, sizeof buf, "%.3f MB", bytes / 1e6);
  else if (bytes >= 1e3)
    std::snprintf(buf, sizeof buf, "%.3f KB", bytes / 1e3);
  else
    std::snprintf(buf, sizeof buf, "%.0f B", bytes);
  return buf;
}

std::string format_seconds(double seconds) {
  char buf[64];
  if (seconds >= 1.0)
    std::snprintf(buf, sizeof buf, "%.4f s", seconds);
  else if (seconds >= 1e-3)
    std::snprintf(buf, sizeof buf, "%.4f ms", seconds * 1e3);
  else
    std::snprintf(buf, sizeof buf, "%.4f us", seconds * 1e6);
  return buf;
}

}  // namespace sdpsim
