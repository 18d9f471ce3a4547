#pragma once

#include <stdexcept>
#include <string>

namespace reld {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension or length mismatch between arguments.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written, or decoded. The message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A solver was handed an operator kind it has no closed form for.
class UnsupportedOperatorError : public Error {
 public:
  using Error::Error;
};

/// A component lacks an optional capability (e.g. a predictor without gradients).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced during an iterative computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public NumericalError {
 public:
  TrainingError(const std::string& what, long step)
      : NumericalError(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace reld
