#pragma once

#include <stdexcept>
#include <string>

namespace msfem {

/// Raised when a linear solve or factorization breaks down (e.g. a matrix
/// that should be SPD is not).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a requested computation would exceed a configured memory or
/// size guard.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MSFEM_REQUIRE(cond, msg)                                                       \
    do {                                                                               \
        if (!(cond)) throw std::invalid_argument(std::string(__func__) + ": " + (msg)); \
    } while (0)

}  // namespace msfem
