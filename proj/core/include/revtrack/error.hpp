#pragma once

#include <stdexcept>
#include <string>

namespace revtrack {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The caller supplied something that violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input file.
class LoadError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Tensor or vector dimensions do not chain.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Optimization produced a non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int last_finite_epoch)
      : Error(what), last_finite_epoch_(last_finite_epoch) {}
  int last_finite_epoch() const { return last_finite_epoch_; }

 private:
  int last_finite_epoch_;
};

}  // namespace revtrack
