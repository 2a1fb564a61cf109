#pragma once

#include <stdexcept>
#include <string>

namespace confwave {

// Exit-code contract used by the CLI: 0 success, 1 configuration error,
// 2 numerical failure (blow-up / NaN / noise floor), 3 coverage error.
enum class ErrorKind {
  configuration,
  usage,
  domain,
  support_violation,
  orientation,
  degenerate_input,
  coverage,
  blowup,
  noise_floor,
  io,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::usage: return "usage";
    case ErrorKind::domain: return "domain";
    case ErrorKind::support_violation: return "support-violation";
    case ErrorKind::orientation: return "orientation";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::blowup: return "blow-up";
    case ErrorKind::noise_floor: return "noise-floor";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

inline int error_exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::blowup:
    case ErrorKind::noise_floor:
      return 2;
    case ErrorKind::coverage:
      return 3;
    default:
      return 1;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  int exit_code() const { return error_exit_code(kind_); }

 private:
  ErrorKind kind_;
};

class ConfigurationError : public Error {
 public:
  ConfigurationError(const std::string& field, const std::string& msg)
      : Error(ErrorKind::configuration, "config field '" + field + "': " + msg),
        field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(ErrorKind::usage, msg) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(ErrorKind::domain, msg) {}
};

class SupportViolationError : public Error {
 public:
  explicit SupportViolationError(const std::string& msg)
      : Error(ErrorKind::support_violation, msg) {}
};

class OrientationError : public Error {
 public:
  explicit OrientationError(const std::string& msg)
      : Error(ErrorKind::orientation, msg) {}
};

class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& msg)
      : Error(ErrorKind::degenerate_input, msg) {}
};

class CoverageError : public Error {
 public:
  CoverageError(const std::string& msg, double t, double r)
      : Error(ErrorKind::coverage, msg), t_(t), r_(r) {}
  double t() const { return t_; }
  double r() const { return r_; }

 private:
  double t_ = 0, r_ = 0;
};

class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& msg, double t, double r, double value)
      : Error(ErrorKind::blowup, msg), t_(t), r_(r), value_(value) {}
  double t() const { return t_; }
  double r() const { return r_; }
  double value() const { return value_; }

 private:
  double t_ = 0, r_ = 0, value_ = 0;
};

class NoiseFloorError : public Error {
 public:
  explicit NoiseFloorError(const std::string& msg)
      : Error(ErrorKind::noise_floor, msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(ErrorKind::io, msg) {}
};

} // namespace confwave
