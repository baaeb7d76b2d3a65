#include "star/number_format.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace star {

std::string format_number(double value) {
    if (value == 0.0) {
        return "0";
    }
    std::array<char, 64> buf{};
    constexpr double kExactIntegerLimit = 9007199254740992.0;  // 2^53
    if (std::isfinite(value) && std::trunc(value) == value && std::fabs(value) < kExactIntegerLimit) {
        auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), static_cast<long long>(value));
        return std::string(buf.data(), end);
    }
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

} // namespace star
