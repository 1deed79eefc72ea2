#pragma once

#include <stdexcept>
#include <string>

namespace phom {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two operands live on different cube domains.
class DomainMismatch : public Error {
 public:
  explicit DomainMismatch(const std::string& what) : Error("domain mismatch: " + what) {}
};

/// A precondition on the arguments does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A solver broke down (indefinite operator, singular block, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A file could not be parsed as one of the PH* formats.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace phom
