#include "gatlas/error.hpp"

namespace gatlas {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::data: return "data";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::state: return "state";
    case ErrorKind::io: return "io";
    case ErrorKind::solver: return "solver";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return 2;
    case ErrorKind::solver:
    case ErrorKind::numerical: return 3;
    default: return 1;
  }
}

}  // namespace gatlas
