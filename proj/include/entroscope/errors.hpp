#pragma once

#include <stdexcept>
#include <string>

namespace entroscope {

/// Precondition violations: out-of-range parameters, bad counts, budget guards.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures that come from the dynamics or the arithmetic rather than
/// from a malformed request.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DerivativeUndefined : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EscapingPoint : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The critical orbit returned to the turning point, so derivative-based
/// quantities along it vanish.
class CriticalHit : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientPrecision : public NumericalError {
 public:
  InsufficientPrecision(const std::string& what, double bracket_lo, double bracket_hi)
      : NumericalError(what), lo(bracket_lo), hi(bracket_hi) {}
  explicit InsufficientPrecision(const std::string& what) : NumericalError(what) {}

  // Partial bracket on the tent slope at the point the bisection gave up.
  double lo = 1.0;
  double hi = 2.0;
};

class NotApplicable : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotResolved : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientSignal : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace entroscope
