#pragma once

#include <stdexcept>
#include <string>

namespace sigf {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  domain,
  configuration,
  resource,
  numeric,
  accuracy,
  sampling,
  statistical,
  parse,
  internal,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::resource: return "resource";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::accuracy: return "accuracy";
    case ErrorKind::sampling: return "sampling";
    case ErrorKind::statistical: return "statistical";
    case ErrorKind::parse: return "parse";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::configuration, w) {}
};
struct ResourceError : Error {
  explicit ResourceError(const std::string& w) : Error(ErrorKind::resource, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};
struct AccuracyError : Error {
  AccuracyError(const std::string& w, double achieved)
      : Error(ErrorKind::accuracy, w), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};
struct SamplingError : Error {
  SamplingError(const std::string& w, double acceptance_rate)
      : Error(ErrorKind::sampling, w), acceptance_rate_(acceptance_rate) {}
  double acceptance_rate() const noexcept { return acceptance_rate_; }

 private:
  double acceptance_rate_;
};
struct StatisticalError : Error {
  StatisticalError(const std::string& w, std::size_t count)
      : Error(ErrorKind::statistical, w), count_(count) {}
  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t count_;
};
enum class ParseFailure { magic, version, length };

struct ParseError : Error {
  ParseError(const std::string& w, ParseFailure f) : Error(ErrorKind::parse, w), failure_(f) {}
  ParseFailure failure() const noexcept { return failure_; }

 private:
  ParseFailure failure_;
};
struct InternalError : Error {
  explicit InternalError(const std::string& w) : Error(ErrorKind::internal, w) {}
};

}  // namespace sigf
