#pragma once

#include <stdexcept>
#include <string>

namespace mmseq {

// Dimension mismatch between operands.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed files, inconsistent records, unknown ids, empty sequences.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration: bad mode, degenerate weights, k < 1, tape mismatch.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite math is required.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mmseq
