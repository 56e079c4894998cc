#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace survtest {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Strict parse of a full string as double; throws ValidationError on junk.
double parse_double(std::string_view text);

long long parse_integer(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);

std::string_view trim(std::string_view text);

/// FNV-1a, 64 bit. Used for file fingerprints and feature-order checksums.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

std::string read_text_file(const std::string& path);

void write_text_file(const std::string& path, std::string_view contents);

}  // namespace survtest
