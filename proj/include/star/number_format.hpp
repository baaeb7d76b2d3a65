#pragma once

#include <string>

namespace star {

// Shortest decimal text that parses back to the same double. Integral values
// below 2^53 in magnitude are written without a decimal point or exponent.
std::string format_number(double value);

} // namespace star
