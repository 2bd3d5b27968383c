#pragma once
#ifndef TNN_CSV_HPP
#define TNN_CSV_HPP

#include <charconv>
#include <cstdint>
#include <string>

namespace tnn {

/// Shortest round-trip decimal form of a double; keeps emitted CSV/JSON
/// reproducible byte-for-byte across runs.
inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::string format_u64(std::uint64_t value) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

} // namespace tnn

#endif // TNN_CSV_HPP
