#pragma once

#include <stdexcept>
#include <string>

namespace symfield {

//! Base class of all library errors. code() is a stable machine-readable tag.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Bad input: wrong shapes, unknown names, violated preconditions. CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown during a computation. CLI exit code 3.
/// index() carries the epoch or step where it happened, or -1.
class NumericalError : public Error {
 public:
  NumericalError(std::string code, const std::string& message, long index = -1)
      : Error(std::move(code), message), index_(index) {}

  long index() const { return index_; }

 private:
  long index_;
};

}  // namespace symfield
