#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace cptgen {

/// Where in an input a problem was found. Any field may be absent.
struct Location {
  std::optional<std::size_t> row;     // 1-based data row
  std::optional<std::size_t> column;  // 1-based file column
  std::string node;

  std::string describe() const;
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input values break a probability invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& reason, Location where = {});
  const Location& where() const noexcept { return where_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
  Location where_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateMarginalError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class SoftEvidenceError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

class PredictorRangeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& reason, Location where = {});
  const Location& where() const noexcept { return where_; }

 private:
  Location where_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cptgen
