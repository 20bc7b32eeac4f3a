#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace entrocert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A discrete distribution failed its positivity or normalization check.
class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

/// A gridded density failed its step, positivity or normalization check.
class InvalidDensity : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A filter weight w_n fell below the usable floor.
class DegenerateRatio : public Error {
 public:
  DegenerateRatio(const std::string& what, double weight, std::size_t index = npos)
      : Error(what), weight_(weight), index_(index) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  double weight() const noexcept { return weight_; }
  std::size_t index() const noexcept { return index_; }

 private:
  double weight_;
  std::size_t index_;
};

/// A filter bank does not cover enough of the density's mass.
class CoverageFailure : public Error {
 public:
  CoverageFailure(const std::string& what, double coverage)
      : Error(what), coverage_(coverage) {}
  double coverage() const noexcept { return coverage_; }

 private:
  double coverage_;
};

/// A grid is too coarse for the features it has to resolve.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Entropy bound kinds do not fit the requested witness inequality.
class KindMismatch : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Malformed CSV/JSON input. `line` is 1-based, 0 when not applicable.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid configuration values (missing fields, unit ambiguity, out of range).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace entrocert
