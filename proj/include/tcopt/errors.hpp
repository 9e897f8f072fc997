#pragma once

#include <stdexcept>
#include <string>

namespace tcopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Input outside the domain where a formula is valid (negative radius, r > R, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Iterative solver failed to converge; the message carries bracket / trace diagnostics.
class SolverError : public Error {
  public:
    using Error::Error;
};

/// Bad or inconsistent configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error {
  public:
    using Error::Error;
};

/// Spectral window holds no usable signal above the noise floor.
class AmplitudeFloorError : public Error {
  public:
    using Error::Error;
};

} // namespace tcopt
