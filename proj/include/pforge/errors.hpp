#pragma once

#include <stdexcept>
#include <string>

namespace pforge {

/// Base of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation outside the region where a field or chart is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mismatched dimensions or violated preconditions.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Non-convergence, singular systems, step underflow.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Bad user configuration (unknown keys, invalid parameters, off-shell data).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pforge
