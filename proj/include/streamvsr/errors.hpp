// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace streamvsr {

// Base class for all library errors. The CLI maps subclasses to exit codes:
// 0 success, 2 config, 3 dependency, 4 numeric divergence, 1 anything else.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class UnsupportedMotionError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

// Malformed file content; carries the byte offset of the first bad byte.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t byte_offset)
      : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class DependencyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericDivergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace streamvsr
