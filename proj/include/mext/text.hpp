// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mext {

// Shortest round-trip decimal formatting (to_chars without a precision
// argument is guaranteed to reparse to the same double).
inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a valid decimal number: '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a valid unsigned integer: '" + std::string(s) + "'");
    return v;
}

// Antenna indices are 0-based in memory and 1-based in every exported or
// printed form; the join/split pair is the single conversion point.
inline std::string join_indices_1based(const std::vector<int> &idx, char sep = ';') {
    std::string out;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i)
            out.push_back(sep);
        out += std::to_string(idx[i] + 1);
    }
    return out;
}

inline std::vector<int> split_indices_1based(std::string_view s, char sep = ';') {
    std::vector<int> out;
    if (s.empty())
        return out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        std::string_view tok = s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        int v = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
            throw std::invalid_argument("bad index list entry: '" + std::string(tok) + "'");
        out.push_back(v - 1);
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string> split_csv_line(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

} // namespace mext
