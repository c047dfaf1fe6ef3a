#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mitodet {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or schema. CLI exit status 1.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// File system or codec failure. CLI exit status 2.
class IoError : public Error {
public:
  using Error::Error;
};

class StainEstimationDegenerate : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InvalidTiling : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class DegenerateBox : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class NonFiniteLoss : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class ManifestError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class MalformedAnnotation : public ValidationError {
public:
  MalformedAnnotation(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace mitodet
