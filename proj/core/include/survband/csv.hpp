#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace survband {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

// Strict full-string parses; throw std::invalid_argument on junk.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view text);

}  // namespace survband
