#pragma once

#include <stdexcept>
#include <string>

namespace fourns {

/// Base class for every error the toolkit raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or inputs, rejected before any work is done.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical guard tripped: blow-up, integer overflow, zero denominator.
class NumericalGuardError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing artifacts failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fourns
