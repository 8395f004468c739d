#pragma once

#include <stdexcept>
#include <string>

namespace penal {

/// Invalid configuration: bad grid, out-of-range parameter, non-integrable input.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A state or argument outside the domain of a function (e.g. phi off S^Gamma).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// API misuse: model mismatch, time off the path grid.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical failure: singular system, quadrature that does not converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace penal
