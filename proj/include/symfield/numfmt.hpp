#pragma once

#include <string>
#include <string_view>

namespace symfield {

/// Shortest decimal that parses back to exactly the same double.
std::string format_double(double value);

/// Parses a full decimal token; throws ValidationError on garbage.
double parse_double(std::string_view text);

}  // namespace symfield
