#pragma once

#include <stdexcept>
#include <string>

namespace dmra {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument violates a documented precondition (length mismatch, negative sigma, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The input is a non-generic instance: a denominator, a leading coefficient or a
/// power-spectrum entry vanished. The message names the quantity that failed.
class DegenerateInstance : public Error {
 public:
  using Error::Error;
};

/// Moments are inconsistent with any (signal, distribution) pair.
class InconsistentMoments : public Error {
 public:
  using Error::Error;
};

/// Numerical routine did not converge.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Dataset / CSV reading and writing.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dmra
