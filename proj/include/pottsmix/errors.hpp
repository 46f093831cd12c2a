#pragma once

#include <stdexcept>
#include <string>

namespace pottsmix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input that cannot be processed, e.g. an all-zero matrix.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class InvalidGeometryError : public Error {
 public:
  using Error::Error;
};

class InvalidLabelError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Bad tuning parameter or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

class LinearAlgebraError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, parsed, or has inconsistent shapes.
class IngestionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// The solver produced a non-finite objective.
class NumericalFailureError : public Error {
 public:
  NumericalFailureError(const std::string& what, int iteration);
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace pottsmix
