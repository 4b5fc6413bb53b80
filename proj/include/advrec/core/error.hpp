#ifndef ADVREC_CORE_ERROR_HPP
#define ADVREC_CORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace advrec {

enum class ErrorKind {
  dimension,
  numeric,
  config,
  lookup,
  action,
  parse,
  data,
  factor,
  training,
  io,
  report,
  usage,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::config: return "config error";
    case ErrorKind::lookup: return "lookup error";
    case ErrorKind::action: return "action error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::data: return "data error";
    case ErrorKind::factor: return "factor error";
    case ErrorKind::training: return "training error";
    case ErrorKind::io: return "io error";
    case ErrorKind::report: return "report error";
    case ErrorKind::usage: return "usage error";
  }
  return "error";
}

/// Single exception type for the library; `kind()` carries the category
/// the CLI maps onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

/// Exit code contract: 0 ok, 2 usage/config, 3 data, 4 numeric/training.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::config:
    case ErrorKind::io:
      return 2;
    case ErrorKind::data:
    case ErrorKind::parse:
    case ErrorKind::lookup:
    case ErrorKind::factor:
    case ErrorKind::report:
      return 3;
    case ErrorKind::numeric:
    case ErrorKind::training:
    case ErrorKind::dimension:
    case ErrorKind::action:
      return 4;
  }
  return 1;
}

}  // namespace advrec

#endif  // ADVREC_CORE_ERROR_HPP
