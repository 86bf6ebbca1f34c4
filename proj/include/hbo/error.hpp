#pragma once

#include <stdexcept>
#include <string>

namespace hbo {

/// Base of every error thrown by the library. The CLI maps the concrete
/// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, flags or preconditions on caller-supplied parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, missing or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Row-level schema violation while parsing a match file.
class SchemaError : public DataError {
 public:
  SchemaError(std::size_t row, std::string field, const std::string& what)
      : DataError("row " + std::to_string(row) + ", field '" + field + "': " + what),
        row_(row),
        field_(std::move(field)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t row_;
  std::string field_;
};

/// Model file problems.
class ModelFormatError : public DataError {
 public:
  using DataError::DataError;
};

class VersionError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

/// Failures talking to an external service (completion endpoint, match API).
class ServiceError : public Error {
 public:
  ServiceError(const std::string& what, int status = 0) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class TimeoutError : public ServiceError {
 public:
  using ServiceError::ServiceError;
};

}  // namespace hbo
