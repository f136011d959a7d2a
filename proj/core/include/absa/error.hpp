#pragma once

#include <stdexcept>
#include <string>

namespace absa {

// Base type for all workbench errors so callers can catch one family.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor extents do not line up (matmul inner dims, broadcast, ...).
struct ShapeError : Error {
    using Error::Error;
};

// Invalid configuration value (dropout outside [0,1), max_len < 3, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Input data violates the documented format or its own invariants.
struct DataError : Error {
    using Error::Error;
};

// API called out of contract (backward off-tape, step before backward, ...).
struct UsageError : Error {
    using Error::Error;
};

// Malformed input document (XML, record file, checkpoint container).
struct ParseError : Error {
    using Error::Error;
};

// An id or label lies outside its valid range.
struct IndexError : Error {
    using Error::Error;
};

// Filesystem-level failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace absa
