#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cvxrelu/error.hpp"

namespace cvxrelu {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Numerical tolerances shared across modules.
inline constexpr double TOL_FEAS = 1e-10;
inline constexpr double TOL_DIR = 1e-7;
inline constexpr double TOL_DUAL = 1e-6;
inline constexpr double TOL_PATH = 1e-5;

enum class Mode { Regression, Interpolation };

struct Dataset {
  Mat x;  // n x d raw inputs
  Vec y;
  double beta = 0.0;
  Mode mode = Mode::Regression;
  bool has_bias = false;
  bool has_skip = false;

  int n() const { return static_cast<int>(x.rows()); }
  // Width of the effective design (raw columns plus the optional ones column).
  int dim() const { return static_cast<int>(x.cols()) + (has_bias ? 1 : 0); }
  // Regularization weight used by the certificate; interpolation uses 1.
  double weight() const { return mode == Mode::Interpolation ? 1.0 : beta; }

  Mat design() const;
  // Append the bias coordinate to a raw input row.
  Vec lift(const Vec& raw) const;
  void validate() const;
};

}  // namespace cvxrelu
