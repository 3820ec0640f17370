#pragma once

#include <stdexcept>
#include <string>

namespace ermakov {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Unbound variable or other failure to produce a value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// sqrt of a negative, log of a non-positive, division by zero, r <= 0, ...
class DomainError : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

/// I < V(theta): the angle is unreachable at this invariant value.
class ForbiddenRegion : public DomainError {
 public:
  ForbiddenRegion(const std::string& what, double theta)
      : DomainError(what), theta_(theta) {}
  double theta() const noexcept { return theta_; }

 private:
  double theta_;
};

/// |I - V(theta)| below the turning-point tolerance.
class TurningPoint : public DomainError {
 public:
  TurningPoint(const std::string& what, double theta)
      : DomainError(what), theta_(theta) {}
  double theta() const noexcept { return theta_; }

 private:
  double theta_;
};

/// Invalid run configuration; path names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace ermakov
