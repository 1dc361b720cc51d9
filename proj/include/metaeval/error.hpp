#pragma once

#include <stdexcept>
#include <string>

namespace metaeval {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Class or feature index outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (bad keys, inconsistent parameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents. The message carries the byte offset where known.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid statistical input (too few pairs, non-finite entries).
class InputError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

/// A perturbation could not satisfy the requested minor/disruptive definition.
class PerturbationInfeasibleError : public Error {
 public:
  PerturbationInfeasibleError(const std::string& what, double achieved)
      : Error(what), achieved_fraction(achieved) {}
  double achieved_fraction;
};

/// Runtime failure of a meta-evaluation run (too many undefined estimates,
/// too many dropped samples, degenerate criteria).
class RunError : public Error {
 public:
  using Error::Error;
};

}  // namespace metaeval
