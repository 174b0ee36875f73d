#pragma once

#include <stdexcept>
#include <string>

namespace trisemi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (dimension mismatch, bad ids, parse failures).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// An operation's documented precondition does not hold for otherwise well-formed input.
class PreconditionViolation : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// Word evaluation produced an entry beyond the representable range.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// No exponent vector satisfies the box / min_m0 / sign constraints.
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// The generator log-moduli do not positively span the space.
class SpanningFailure : public Error {
 public:
  using Error::Error;
};

/// A generic target (z != 0, W without zeros) was required but not supplied.
class GenericityViolation : public PreconditionViolation {
 public:
  using PreconditionViolation::PreconditionViolation;
};

}  // namespace trisemi
