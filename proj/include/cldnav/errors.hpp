#pragma once

#include <stdexcept>
#include <string>

namespace cldnav {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solve did not converge within its budget, or the input is
/// degenerate/ill-scaled. Carries residual diagnostics in the message.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

class SingularSteering : public Error {
 public:
  using Error::Error;
};

class EmptyTrainingSet : public Error {
 public:
  using Error::Error;
};

class UnknownSensor : public Error {
 public:
  using Error::Error;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class InvalidPoint : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class OutOfBounds : public Error {
 public:
  using Error::Error;
};

class InfeasibleSeed : public Error {
 public:
  using Error::Error;
};

class NoProgress : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cldnav
