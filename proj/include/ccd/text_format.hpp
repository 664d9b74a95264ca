#pragma once

// Deterministic number formatting shared by the log, CSV and scenario writers.

#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <system_error>

#include "ccd/errors.hpp"

namespace ccd::text {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

// Stamps carry at least six decimals; falls back to the shortest exact
// form when six decimals would not round-trip.
inline std::string format_stamp(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
    std::string fixed(buf, res.ptr);
    double back = 0.0;
    std::from_chars(fixed.data(), fixed.data() + fixed.size(), back);
    return back == v ? fixed : format_double(v);
}

inline bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline bool parse_size(std::string_view s, std::size_t& out)
{
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

} // namespace ccd::text
