#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace rrmh {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point in parameter space (length d).
using ParameterVector = Vector;
/// A point in data space (length m).
using DataVector = Vector;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// A forward solver failed to produce a result.
class SolverError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (chain CSV, mesh, state JSON).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Raised when a calibration denominator vanishes; carries the offending component.
class CalibrationError : public Error {
 public:
  CalibrationError(Index component, const std::string& what)
      : Error(what), component_(component) {}
  Index component() const noexcept { return component_; }

 private:
  Index component_;
};

/// Invalid experiment configuration; `field()` is a JSON-pointer style path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

void require_dim(Index actual, Index expected, const char* what);
void require_finite(const Vector& v, const char* what);

/// Seeded std::mt19937_64 with a draw counter.
///
/// Uniforms and normals are derived from raw engine output with explicit
/// arithmetic rather than std distributions (whose algorithms are
/// implementation-defined), so a seed yields the same stream with any
/// standard library.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  /// Number of raw 64-bit words consumed so far.
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1); safe for log().
  double uniform_open();
  double normal();
  Vector normal_vector(Index n);
  std::size_t uniform_index(std::size_t n);

  /// Independent stream derived from this one's seed and `stream_id`.
  RandomStream split(std::uint64_t stream_id) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::mt19937_64 engine_;
};

}  // namespace rrmh
