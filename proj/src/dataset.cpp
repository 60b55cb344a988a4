#include <cmath>
#include <string>

#include "cvxrelu/types.hpp"

namespace cvxrelu {

const char* error_tag(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "INVALID_INPUT";
    case ErrorCode::LimitExceeded: return "LIMIT_EXCEEDED";
    case ErrorCode::DegenerateData: return "DEGENERATE_DATA";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::Infeasible: return "INFEASIBLE";
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::CertificateFailed: return "CERTIFICATE_FAILED";
    case ErrorCode::NotOptimal: return "NOT_OPTIMAL";
    case ErrorCode::EmptySubset: return "EMPTY_SUBSET";
    case ErrorCode::NoSolution: return "NO_SOLUTION";
    case ErrorCode::WidthTooSmall: return "WIDTH_TOO_SMALL";
    case ErrorCode::PreconditionViolated: return "PRECONDITION_VIOLATED";
    case ErrorCode::NotConnected: return "NOT_CONNECTED";
    case ErrorCode::InvalidGeometry: return "INVALID_GEOMETRY";
    case ErrorCode::Diverged: return "DIVERGED";
    case ErrorCode::NotNearOptimal: return "NOT_NEAR_OPTIMAL";
  }
  return "UNKNOWN";
}

Mat Dataset::design() const {
  if (!has_bias) return x;
  Mat out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

Vec Dataset::lift(const Vec& raw) const {
  if (!has_bias) return raw;
  Vec out(raw.size() + 1);
  out.head(raw.size()) = raw;
  out(raw.size()) = 1.0;
  return out;
}

void Dataset::validate() const {
  if (x.rows() == 0 || x.cols() == 0)
    throw Error(ErrorCode::InvalidInput, "dataset has no samples or no features");
  if (y.size() != x.rows())
    throw Error(ErrorCode::InvalidInput, "label count " + std::to_string(y.size()) +
                                             " differs from sample count " +
                                             std::to_string(x.rows()));
  if (!x.allFinite() || !y.allFinite())
    throw Error(ErrorCode::InvalidInput, "dataset contains non-finite values");
  if (mode == Mode::Regression && !(beta > 0.0 && std::isfinite(beta)))
    throw Error(ErrorCode::InvalidInput, "regression mode needs beta > 0");
}

}  // namespace cvxrelu
