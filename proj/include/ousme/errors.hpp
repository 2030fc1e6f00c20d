#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace ousme {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the admissible domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The drift map was fed a non-positive second moment.
class NonPositiveMoment : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A value cannot be inverted because it lies outside the range of the map.
class OutOfRange : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A size exceeds the cap of an exact or brute-force routine.
class CapExceeded : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Failures of numerical procedures (quadrature, embedding, tail control).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : NumericalError(what + " (achieved error estimate " + format_error(achieved_error) + ")"),
        achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }

 private:
  static std::string format_error(double e) {
    std::ostringstream os;
    os << e;
    return os.str();
  }

  double achieved_error_;
};

class EmbeddingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Invalid experiment configuration (CLI flags or config file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ousme
