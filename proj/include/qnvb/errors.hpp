#pragma once

#include <stdexcept>
#include <string>

namespace qnvb {

/// Bad input: violated preconditions, malformed files, inconsistent configs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value or could not be carried out.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the support of a variational density.
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The Gram matrix could not be factorized even after jitter escalation.
class IllConditionedError : public NumericalError {
 public:
  IllConditionedError(const std::string& what, double kappa)
      : NumericalError(what), kappa_(kappa) {}
  double kappa() const noexcept { return kappa_; }

 private:
  double kappa_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qnvb
