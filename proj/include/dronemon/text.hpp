#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dronemon {

/// Fixed-point formatting that ignores the global C/C++ locale.
std::string format_fixed(double value, int decimals);

/// Shortest round-trip representation, locale independent.
std::string format_real(double value);

/// Full-string parses; whitespace around the token is ignored.
std::optional<double> parse_real(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char delimiter);

/// Zero-padded six-digit frame file name, e.g. 1 -> "000001.png".
std::string frame_file_name(std::size_t frame_number);

}  // namespace dronemon
