#pragma once

#include <cstdint>
#include <string>

namespace sdpsim {

/// Parses "12.5 GB/s", "32 GiB", "10 us", "125 TFLOPS", "1e9", ...
/// Decimal prefixes are powers of 1000, binary (KiB/MiB/...) powers of 1024.
/// Throws Error(ConfigError) on unknown units.
double parse_quantity(const std::string& text);

std::string format_bytes(double bytes);
std::string format_seconds(double seconds);

}  // namespace sdpsim
