#pragma once

// Internal text helpers shared by the file formats: shortest round-trip float
// formatting and strict numeric parsing.

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

#include "cfb/errors.hpp"

namespace cfb::detail {

template <typename T>
std::string format_number(T value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw FormatError("number formatting failed");
    return std::string(buf, ptr);
}

inline std::string format_float(float v) { return format_number(v); }
inline std::string format_double(double v) { return format_number(v); }

template <typename T>
T parse_number(std::string_view text, const std::string& where) {
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty())
        throw FormatError(where + ": not a " +
                          (std::is_integral_v<T> ? "valid integer" : "valid number") + ": '" +
                          std::string(text) + "'");
    return value;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

/// Splits on a single-character delimiter; keeps empty fields.
inline std::vector<std::string_view> split(std::string_view s, char delim) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = s.find(delim, pos);
        if (next == std::string_view::npos) {
            out.push_back(s.substr(pos));
            break;
        }
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

}  // namespace cfb::detail
