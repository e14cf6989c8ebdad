#pragma once

#include <stdexcept>
#include <string>

namespace pca {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad table sizes, out-of-range parameters, unknown names.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A configured size cap (sites, support, torus volume) would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// The rule violates |h| <= 1 and cannot define transition probabilities.
class Inadmissible : public Error {
 public:
  using Error::Error;
};

/// A quantity that only exists for kappa < 1 was requested with kappa >= 1.
class NotContractive : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped at its iteration cap.
class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace pca
