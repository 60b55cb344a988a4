#pragma once

#include <stdexcept>
#include <string>

namespace cvxrelu {

enum class ErrorCode {
  InvalidInput,
  LimitExceeded,
  DegenerateData,
  NoConvergence,
  Infeasible,
  ShapeMismatch,
  CertificateFailed,
  NotOptimal,
  EmptySubset,
  NoSolution,
  WidthTooSmall,
  PreconditionViolated,
  NotConnected,
  InvalidGeometry,
  Diverged,
  NotNearOptimal,
};

const char* error_tag(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cvxrelu
