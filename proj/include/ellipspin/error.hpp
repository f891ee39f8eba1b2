#pragma once

#include <stdexcept>
#include <string>

namespace ellipspin {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Caller violated a documented precondition (e.g. closed form used off resonance).
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Internal identity failed; indicates a bug rather than bad input.
class ConsistencyError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

class IntegrationError : public std::runtime_error {
public:
  IntegrationError(const std::string& what, double last_good_tau)
      : std::runtime_error(what), last_good_tau_(last_good_tau) {}

  double last_good_tau() const noexcept { return last_good_tau_; }

private:
  double last_good_tau_;
};

// Analytic continuation path comes too close to a singular point.
class PathError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A local series failed to converge within the requested number of terms.
class StepError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace ellipspin
