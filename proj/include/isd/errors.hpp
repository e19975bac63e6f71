#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace isd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value object was constructed with parameters that break its invariants.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Every state assigns zero likelihood to an observation (outside model support).
class DegenerateLikelihood : public Error {
 public:
  explicit DegenerateLikelihood(std::size_t index)
      : Error("degenerate likelihood at step " + std::to_string(index)), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Path enumeration was asked for a sequence longer than its cap.
class CapExceeded : public Error {
 public:
  CapExceeded(std::size_t length, std::size_t cap)
      : Error("sequence length " + std::to_string(length) + " exceeds enumeration cap " +
              std::to_string(cap)) {}
};

class EmptyTrialSet : public Error {
 public:
  EmptyTrialSet() : Error("no trial has a defined stopping time") {}
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

class NotConverged : public Error {
 public:
  NotConverged(std::size_t iterations, double residual)
      : Error("value iteration did not converge after " + std::to_string(iterations) +
              " iterations (residual " + std::to_string(residual) + ")"),
        iterations_(iterations), residual_(residual) {}
  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

class NotAnInterval : public Error {
 public:
  using Error::Error;
};

class InvalidPatch : public Error {
 public:
  using Error::Error;
};

class ScheduleOutOfBounds : public Error {
 public:
  using Error::Error;
};

}  // namespace isd
