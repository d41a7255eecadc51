#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace rgl {

enum class ErrorKind {
  Precondition,   // input violates an operation's contract
  Shape,          // dimension mismatch
  Numerical,      // eigensolver / SVD failure or an ambiguous rank decision
  RefinePath,     // a transport step exceeds the cap; the path needs refinement
  Inconclusive,   // a classifier could not decide
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::RefinePath: return "refine-path";
    case ErrorKind::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Grid index at which the failure was detected, when meaningful.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> index_;
};

}  // namespace rgl
