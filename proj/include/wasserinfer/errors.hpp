#pragma once

#include <stdexcept>
#include <string>

namespace wasserinfer {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySample : public Error {
 public:
  EmptySample() : Error("sample is empty") {}
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation (t, p, alpha, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class SampleTooSmall : public Error {
 public:
  using Error::Error;
};

class MissingColumn : public Error {
 public:
  explicit MissingColumn(const std::string& column)
      : Error("missing column '" + column + "'") {}
};

/// Malformed input data. `row()` is the 1-based data row, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(row > 0 ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// A file could not be opened or read.
class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyGroup : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace wasserinfer
