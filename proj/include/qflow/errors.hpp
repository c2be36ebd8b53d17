#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid manifold construction or incompatible field sizes.
class ManifoldError : public Error {
 public:
  using Error::Error;
};

/// A linear solve hit a non-positive pivot (coercivity of P violated).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A field left the positive cone. Carries the offending node.
class PositivityError : public Error {
 public:
  PositivityError(const std::string& what, std::ptrdiff_t node, double suggested_dt)
      : Error(what), node_(node), suggested_dt_(suggested_dt) {}

  std::ptrdiff_t node() const { return node_; }
  double suggested_dt() const { return suggested_dt_; }

 private:
  std::ptrdiff_t node_;
  double suggested_dt_;
};

/// Initial data with u > 0 but P u < 0 somewhere.
class ConeError : public Error {
 public:
  ConeError(const std::string& what, std::ptrdiff_t node) : Error(what), node_(node) {}
  std::ptrdiff_t node() const { return node_; }

 private:
  std::ptrdiff_t node_;
};

/// E_f increased beyond the monotonicity slack: the integrator is failing.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Configuration problems; messages carry line numbers when available.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qflow
