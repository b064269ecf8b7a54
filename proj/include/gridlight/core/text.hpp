#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gridlight {

// Shortest decimal form that parses back to exactly the same double
// (std::to_chars).  Used for every float written to CSV or manifest files so
// output is locale-free and byte-reproducible.
std::string format_double(double v);

std::vector<std::string> split(std::string_view s, char sep);

// Trim ASCII whitespace from both ends.
std::string_view trim(std::string_view s);

// Strict parsers: the whole trimmed token must be consumed, otherwise throws
// std::invalid_argument with the offending text in the message.
double parse_double(std::string_view s);
long parse_long(std::string_view s);

}  // namespace gridlight
