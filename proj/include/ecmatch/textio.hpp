#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ecmatch {

// Shortest decimal representation that parses back to the same double.
std::string fmt_double(double x);

// Strict parsers: the whole (trimmed) token must be consumed.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);

// Splits on `delim`, keeping empty fields.
std::vector<std::string> split(std::string_view s, char delim);

}  // namespace ecmatch
