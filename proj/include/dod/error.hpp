#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dod {

/// Broad failure classes. The CLI maps each one onto a process exit code.
enum class ErrorKind {
  Io,         // unreadable / unwritable file
  Format,     // bad magic, CRC mismatch, malformed header
  Dimension,  // inconsistent shapes
  Numerical,  // rank deficiency, degenerate samples, non-symmetric input
  Training,   // aborted optimization
  Config,     // bad user-supplied configuration
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(ErrorKind::Dimension, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// A column could not be orthonormalized; `column()` is the offending index.
class RankDeficient : public Error {
 public:
  RankDeficient(std::size_t column, const std::string& what)
      : Error(ErrorKind::Numerical, what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Differentiable Gram-Schmidt met a pivot below its hard threshold.
class NearRankDeficient : public RankDeficient {
 public:
  using RankDeficient::RankDeficient;
};

class NonSymmetric : public Error {
 public:
  explicit NonSymmetric(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class DegenerateSample : public Error {
 public:
  explicit DegenerateSample(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class NonFiniteGradient : public Error {
 public:
  explicit NonFiniteGradient(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class TrainingAborted : public Error {
 public:
  explicit TrainingAborted(const std::string& what) : Error(ErrorKind::Training, what) {}
};

class EmptyOrThinCluster : public Error {
 public:
  explicit EmptyOrThinCluster(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class TapeConsumed : public Error {
 public:
  explicit TapeConsumed(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace detail

}  // namespace dod
