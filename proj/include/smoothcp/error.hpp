#pragma once

#include <stdexcept>
#include <string>

namespace smoothcp {

/// Raised when an input violates an operation's precondition.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

namespace detail {

inline void require(bool condition, const char* message) {
    if (!condition) throw ValidationError(message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

} // namespace detail
} // namespace smoothcp
