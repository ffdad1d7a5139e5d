#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace legival::util {

// Hex-encoded SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

// FNV-1a 64-bit. Used to derive deterministic pseudo-random streams from
// text (mock embedder, scripted noise); not for cache keys.
std::uint64_t fnv1a64(std::string_view data);

// splitmix64 step; good enough as a stateless counter-based generator.
std::uint64_t splitmix64(std::uint64_t x);

// Uniform double in [0,1) from a 64-bit word.
double unit_double(std::uint64_t x);

std::string_view trim(std::string_view s);
std::string to_upper(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

// Collapse every whitespace run to a single space and trim the ends.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

// Median of an unsorted sample; average of the middle two for even sizes.
std::optional<double> median(std::vector<double> values);

// Fixed-precision decimal formatting, locale-independent ("%.*f").
std::string format_fixed(double v, int digits);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace legival::util
