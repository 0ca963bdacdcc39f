#pragma once

#include <stdexcept>
#include <string>

namespace bbm {

// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// A parameter lies outside its mathematical domain (cube outside the unit
// cube, epsilon outside (0,1], t outside (0,1/2), ...).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

// Two grids that must match do not.
class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

// A cube family is not admissible.
class FamilyError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "family"; }
};

// An exhaustive or exact solver was asked to handle too many candidates.
class CapacityError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "capacity"; }
};

class ArgumentError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "argument"; }
};

class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format"; }
};

}  // namespace bbm
