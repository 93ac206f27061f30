#pragma once

#include <stdexcept>
#include <string>

namespace floquet_ep {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model, preset, grid or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A computation produced non-finite values or failed to converge.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, int segment = -1)
      : Error(what), segment_(segment) {}

  /// Index of the offending propagation segment, or -1 when not applicable.
  [[nodiscard]] int segment() const noexcept { return segment_; }

 private:
  int segment_;
};

/// Instantaneous Hamiltonian sits on an exceptional point: only one eigenvector.
class DefectivePoint : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Left/right overlap too small to biorthonormalize.
class NearEP : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A Berry loop passes through an exceptional point.
class EPOnPath : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A sweep exceeded its budget of failed cells.
class SweepAborted : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed or incompatible result file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace floquet_ep
