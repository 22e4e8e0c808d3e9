#ifndef CPZREPAIR_TEXT_UTIL_HPP
#define CPZREPAIR_TEXT_UTIL_HPP

// Round-trip number formatting shared by the text formats.

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cpzrepair {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Fixed number of significant digits (for CSV output).
inline std::string format_significant(double v, int digits)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s)
{
    long long v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    return v;
}

}  // namespace cpzrepair

#endif  // CPZREPAIR_TEXT_UTIL_HPP
