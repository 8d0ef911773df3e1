#pragma once

#include <stdexcept>
#include <string>

namespace mevt {

/// Broad failure category. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Parse,       // malformed input file
  Data,        // well-formed input with unusable values (NaN, empty, ...)
  Argument,    // caller passed an invalid parameter
  Domain,      // value outside a function's mathematical domain
  Numerical,   // singular system, non-convergence
  Fit,         // estimator failed or hit a degenerate sample
  Transform,   // Frechet / Pickands transform could not be applied
  EmptyTail,   // no joint exceedances
  Bootstrap,   // too many failed resampling rounds
  Interval,    // confidence interval could not be formed
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure carrying the 1-based line number of the offending row.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error(ErrorKind::Parse, what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Transform failure carrying the index of the offending sample.
class TransformError : public Error {
 public:
  TransformError(std::size_t index, const std::string& what)
      : Error(ErrorKind::Transform, what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace mevt
