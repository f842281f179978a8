#pragma once

#include <stdexcept>
#include <string>

namespace flexembed {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files (CSV schema, timestamps, duplicated rows).
class LoadError : public Error {
 public:
  LoadError(const std::string& what, long row = -1)
      : Error(row >= 0 ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

/// Invalid data values (negative generation, degenerate scales, missing series).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (ratios, ranges, unknown keys).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values reached the optimizer or the loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A pipeline command needs an artifact that has not been produced yet.
class MissingArtifactError : public Error {
 public:
  MissingArtifactError(const std::string& path, const std::string& producer)
      : Error("missing artifact '" + path + "'; run `" + producer + "` first"),
        producer_(producer) {}
  const std::string& producer() const noexcept { return producer_; }

 private:
  std::string producer_;
};

}  // namespace flexembed
