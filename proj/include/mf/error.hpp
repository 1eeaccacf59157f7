#pragma once

#include <stdexcept>

namespace mf {

// Shape mismatches, invalid axes/spans.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf surfaced where finite values are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed files, out-of-range ids, missing fields.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameters.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mf
