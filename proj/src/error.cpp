#include "mevt/error.hpp"

namespace mevt {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Data: return "data";
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Fit: return "fit";
    case ErrorKind::Transform: return "transform";
    case ErrorKind::EmptyTail: return "empty-tail";
    case ErrorKind::Bootstrap: return "bootstrap";
    case ErrorKind::Interval: return "interval";
  }
  return "unknown";
}

}  // namespace mevt
