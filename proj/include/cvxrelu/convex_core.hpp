#pragma once

#include <vector>

#include "cvxrelu/arrangement.hpp"

namespace cvxrelu {

// Per-pattern cone variables: fit = sum_i D_i X (u_i - v_i) + X skip.
struct ConvexSolution {
  std::vector<Vec> u;
  std::vector<Vec> v;
  Vec skip;  // empty unless the dataset has a skip connection
  Vec fit;
  double objective = 0.0;
};

struct SolverOptions {
  double rho0 = 1.0;
  int max_iter = 200000;
  double tol_residual = 1e-10;
  // Iterate until the relative gap reaches target_gap; tol_gap is the acceptance bound at budget end.
  double target_gap = 1e-10;
  double tol_gap = TOL_DUAL;
  int check_every = 10;
  bool adaptive_rho = true;
};

struct SolveReport {
  ConvexSolution solution;
  Vec multiplier;  // dual estimate nu taken from the consensus multiplier
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double fit_residual = 0.0;  // ||fit - y|| in interpolation mode
  int iterations = 0;
  double rho = 0.0;
};

SolveReport solve(const Dataset& data, const PatternBasis& basis, const SolverOptions& opts = {});

// Fit of a convex solution: sum_i D_i X (u_i - v_i) + X skip.
Vec convex_fit(const Dataset& data, const PatternBasis& basis, const ConvexSolution& sol);

// Convex objective; interpolation mode returns the group-norm sum only.
double objective(const Dataset& data, const PatternBasis& basis, const ConvexSolution& sol);

// Best dual value attainable by rescaling a candidate nu into the feasible set.
struct DualValue {
  Vec nu;  // feasible rescaled candidate
  double value = 0.0;
  double max_ratio = 0.0;  // max_i ||P_K(-/+ (D_i X)^T nu)|| / weight before scaling
};
DualValue evaluate_dual(const Dataset& data, const std::vector<ConeHandle>& cones, const Vec& nu);

std::vector<ConeHandle> make_cones(const Mat& design, const PatternBasis& basis);

}  // namespace cvxrelu
