#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace distcomp {

// Failure categories. Each maps to a distinct process exit code in the CLI.
enum class ErrorKind {
  invalid_input,
  cap_exceeded,
  infeasible,
  retries_exhausted,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::cap_exceeded: return "cap-exceeded";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::retries_exhausted: return "retries-exhausted";
  }
  return "unknown";
}

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return 2;
    case ErrorKind::cap_exceeded: return 3;
    case ErrorKind::infeasible: return 4;
    case ErrorKind::retries_exhausted: return 5;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::invalid_input, what);
}

}  // namespace distcomp
