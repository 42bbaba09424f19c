#pragma once

#include <stdexcept>
#include <string>

namespace specfid {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or preconditions violated by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, malformed or inconsistent input data (files, CSV, manifests).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace specfid
