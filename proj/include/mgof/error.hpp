#pragma once

#include <stdexcept>
#include <string>

namespace mgof {

enum class ErrorKind {
  kInvalidParameter,
  kInvalidInput,
  kNumericalFailure,
  kInvalidModel,
  kUnderdetermined,  // model saturates the observations (dof <= 0)
  kInvalidPairing,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library. The kind lets callers (notably the
/// CLI) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mgof
