#pragma once

#include <charconv>
#include <string>

namespace doseframe {

/// Locale-independent rendering: shortest round-trip form, or fixed with
/// the given number of decimals.
inline std::string format_double(double x, int decimals = -1)
{
    char buf[64];
    const auto res = decimals < 0 ? std::to_chars(buf, buf + sizeof buf, x)
                                  : std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

} // namespace doseframe
