#pragma once

#include <stdexcept>
#include <string>

namespace egovos {

/// Tensor or raster dimensions do not satisfy an operation's contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid or inconsistent configuration (unknown keys, missing inputs).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Weight archive could not be read or does not match the expected layout.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system / image codec failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace egovos
