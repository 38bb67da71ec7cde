#pragma once

#include <stdexcept>
#include <string>

namespace kramers {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or an inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (e.g. density at z = 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state, failed root solve, or a guard such as the jump cap tripped.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A steering ball left the support of the jump measure.
class SupportViolation : public Error {
 public:
  using Error::Error;
};

/// No admissible candidate path/control exists for the requested transfer.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A realized jump has zero control intensity, so the likelihood ratio is undefined.
class DegenerateWeight : public Error {
 public:
  using Error::Error;
};

}  // namespace kramers
