#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace thc {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: grid sizes, parameters, configuration, file headers.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to deliver its postcondition.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared in the state while time stepping.
class BlowUpError : public SolverError {
 public:
  BlowUpError(std::int64_t step, const std::string& what)
      : SolverError(what), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace thc
