#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jumpflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidModelError : public Error {
 public:
  using Error::Error;
};

// A trajectory or field produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class NoInverseError : public Error {
 public:
  using Error::Error;
};

class SingularMapError : public Error {
 public:
  using Error::Error;
};

// The x-independent coefficient builder was handed a state-dependent jump.
class WrongVariantError : public Error {
 public:
  using Error::Error;
};

class InvariantViolationError : public Error {
 public:
  using Error::Error;
};

class CflError : public Error {
 public:
  CflError(const std::string& what, double required_dt)
      : Error(what), required_dt_(required_dt) {}
  double required_dt() const noexcept { return required_dt_; }

 private:
  double required_dt_;
};

class InstabilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace jumpflow
