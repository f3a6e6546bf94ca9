#pragma once

#include <stdexcept>
#include <string>

namespace slds {

/// Input that violates a documented precondition (shapes, ranges, labels).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Distribution parameters outside their support (e.g. non-positive shape).
class ParameterDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Factorization or inversion failure. The message names the matrix and,
/// where known, the time index.
class LinAlgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown during sampling (NaN weights, empty support).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace slds
