// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fblab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid construction or call parameters (sizes, angles, schedules).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A ball or sample point leaves the grid cube.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A radius is too small relative to the grid spacing.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// A field violates a sign constraint (e.g. negative capillary height).
class ConstraintError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A distance or ratio is requested over an empty set.
class UndefinedError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fblab
