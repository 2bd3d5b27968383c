#pragma once
#ifndef TNN_CORE_HPP
#define TNN_CORE_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tnn {

/// Dense 0-based index of a point within a Dataset.
using PointId = std::uint32_t;

inline constexpr PointId kNoPoint = static_cast<PointId>(-1);

/// Answer to a triplet comparison "is d(x,y) <= d(x,z)?".
/// Ties answer ToY, mirroring the "<=" in the comparison predicate.
enum class Closer : std::uint8_t { ToY, ToZ };

/// Raised for invalid configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised for unreadable or malformed data (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tnn

#endif // TNN_CORE_HPP
