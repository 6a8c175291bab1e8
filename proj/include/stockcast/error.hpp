#pragma once

#include <stdexcept>
#include <string>

namespace stockcast {

// Bad input: malformed files, violated preconditions, invalid configuration.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Failure while doing valid work: diverging training, I/O errors, corrupt
// bundles. The CLI maps this to exit code 2.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ValidationError(message);
    }
}

} // namespace detail
} // namespace stockcast
