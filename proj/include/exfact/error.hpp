#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exfact {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid grid, field or operator shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid model parameters or model/grid incompatibility.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual, std::size_t iterations)
      : Error(what), best_residual_(best_residual), iterations_(iterations) {}

  double best_residual() const noexcept { return best_residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double best_residual_;
  std::size_t iterations_;
};

}  // namespace exfact
