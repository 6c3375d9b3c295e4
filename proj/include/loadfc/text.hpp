#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Locale-independent number formatting and small string helpers shared by
// the file formats.
namespace loadfc::text {

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
// Hexadecimal significand/exponent form ("1.8p+1"); exact.
std::string format_hex(double x);

// Both accept decimal or hexadecimal (with or without 0x) input. Throw
// FormatError naming `what` on failure or trailing garbage.
double parse_double(std::string_view s, std::string_view what);
std::uint64_t parse_u64(std::string_view s, std::string_view what);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

}  // namespace loadfc::text
