#pragma once

#include <stdexcept>
#include <string>

namespace rawnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree. The message names the offending dimension.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input is shorter than the kernel, pooling window or frame size requires.
class InputTooShortError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Misuse of the autodiff tape (e.g. backward on a tensor the tape never produced).
class TapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rawnet
