#pragma once

#include <stdexcept>
#include <string>

namespace taug {

// Invalid user-facing configuration (bad config key, out-of-range value).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shape / dimension mismatch.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file content (checkpoint, dataset).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf encountered where finite values are required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace taug
