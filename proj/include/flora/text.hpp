#pragma once

#include <string>
#include <string_view>

namespace flora {

/// Shortest text form that parses back to the identical double
/// (std::to_chars). Infinities render as "inf"/"-inf".
std::string format_double(double v);

/// Strict full-string parse; throws on garbage. Accepts "inf"/"-inf"/"nan".
double parse_double(std::string_view text, const std::string& what);

std::size_t parse_size(std::string_view text, const std::string& what);

}  // namespace flora
