#pragma once

#include <stdexcept>
#include <string>

namespace mdsclt {

/// Bad input: wrong shape, asymmetric matrix, invalid parameter.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// The input was well formed but the computation could not produce a
/// meaningful answer (singular moments, deficient spectrum, ...).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An iterative method hit its iteration cap.
class ConvergenceError : public NumericalError {
public:
  ConvergenceError(const std::string& what, long iterations)
      : NumericalError(what), iterations_(iterations) {}
  long iterations() const noexcept { return iterations_; }

private:
  long iterations_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace mdsclt
