#pragma once

#include <stdexcept>
#include <string>

namespace gatlas {

enum class ErrorKind {
  validation,
  parse,
  data,
  capacity,
  state,
  io,
  solver,
  numerical,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// CLI exit code for an error kind: 1 validation-like, 2 I/O, 3 numerical.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace gatlas
