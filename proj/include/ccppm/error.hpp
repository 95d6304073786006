#pragma once

#include <stdexcept>
#include <string>

namespace ccppm {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: wrong lengths, out-of-range indices, bad encodings.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Well-formed input on which the requested quantity is undefined
// (constant series, vanishing conditioning probability, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// Quadrature or optimizer did not reach the requested accuracy.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Problems with user-supplied data files.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccppm
