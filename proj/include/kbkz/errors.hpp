#pragma once

#include <stdexcept>
#include <string>

namespace kbkz {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (t < 0, l(0) != 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller misuse: mismatched grids, wrong operator for a kernel, bad sizes.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A data hypothesis of the model does not hold (e.g. g'(0) >= 0).
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

/// The convolution operator is numerically not invertible.
class IllPosedError : public Error {
 public:
  using Error::Error;
};

/// Quadrature could not reach the requested tolerance.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved, double requested)
      : Error(what), achieved_(achieved), requested_(requested) {}
  double achieved() const noexcept { return achieved_; }
  double requested() const noexcept { return requested_; }

 private:
  double achieved_;
  double requested_;
};

/// The accumulated strain left the window [-theta, theta] where g' < 0.
class HyperbolicityBreach : public Error {
 public:
  HyperbolicityBreach(double x, double t, double value, double theta);
  double x() const noexcept { return x_; }
  double t() const noexcept { return t_; }
  double value() const noexcept { return value_; }
  double theta() const noexcept { return theta_; }

 private:
  double x_, t_, value_, theta_;
};

/// The time stepper produced non-finite values or blew up.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

/// Malformed run configuration. `line` is 0 when the problem is a field value.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, int line, const std::string& what);
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

}  // namespace kbkz
