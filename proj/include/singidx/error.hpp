#pragma once

#include <stdexcept>
#include <string>

namespace singidx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive-definite has an eigenvalue at or below the
/// configured floor.
class DegenerateMatrix : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

/// Equality block of a QP is numerically rank-deficient.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

/// The configuration handed to the tracker is (numerically) singular.
class SingularStart : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line) : Error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An output file could not be written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace singidx
