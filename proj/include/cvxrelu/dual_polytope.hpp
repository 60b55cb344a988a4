#pragma once

#include <vector>

#include "cvxrelu/convex_core.hpp"

namespace cvxrelu {

// Dual certificate: nu = y* - y in regression, a feasible multiplier in interpolation.
struct DualCertificate {
  Vec nu;
  Vec y_star;
  double dual_value = 0.0;
  double primal_value = 0.0;
  double gap = 0.0;
  double max_ratio = 0.0;  // max_i ||P_K(-/+ (D_i X)^T nu)|| / weight, at most 1 + TOL_DIR
};

// Optimal direction of one (pattern, sign) pair and its signed generator.
struct Generator {
  int pattern = 0;
  int sign = 1;      // +1 for a u-block, -1 for a v-block
  Vec direction;     // unit vector in the pattern cone
  Vec vector;        // sign * D_i X direction
  bool canonical = false;  // pattern equals 1(X direction >= 0)
};

struct OptimalPolytope {
  Mode mode = Mode::Regression;
  double weight = 1.0;
  bool has_skip = false;
  Mat design;  // effective design
  Vec y;
  Vec y_star;
  Vec nu;
  PatternBasis basis;
  std::vector<Generator> generators;
  double optimal_value = 0.0;

  int n() const { return static_cast<int>(y_star.size()); }
  int size() const { return static_cast<int>(generators.size()); }
  Mat generator_matrix() const;
  // Coordinates of generators and target in the orthogonal complement of the skip range
  // (plain coordinates without skip).
  Mat reduced_generators() const;
  Vec reduced_target() const;
  Mat reducer() const;  // rows: orthonormal basis of that complement
  // Skip vector completing a coefficient vector; empty without skip.
  Vec skip_for(const Vec& c) const;
  // Objective value of any coefficient vector in the polytope.
  double value_of(const Vec& c) const;
  double residual_of(const Vec& c) const;
};

struct PolytopePoint {
  Vec c;
  Vec skip;
};

DualCertificate extract_dual(const Dataset& data, const PatternBasis& basis, const SolveReport& rep);

std::vector<Generator> optimal_directions(const Dataset& data, const PatternBasis& basis,
                                          const DualCertificate& cert);

OptimalPolytope build_polytope(const Dataset& data, const PatternBasis& basis, const DualCertificate& cert);

// Coefficients of an optimal convex solution in generator coordinates.
PolytopePoint decompose(const OptimalPolytope& poly, const ConvexSolution& sol);

// Convex solution placing c_k along generator k.
ConvexSolution to_solution(const OptimalPolytope& poly, const Vec& c);

struct Analysis {
  PatternBasis basis;
  SolveReport report;
  DualCertificate certificate;
  OptimalPolytope polytope;
};

struct AnalysisOptions {
  ArrangementOptions arrangement;
  SolverOptions solver;
};

Analysis analyze(const Dataset& data, const AnalysisOptions& opts = {});

// Same pipeline restricted to a subset of pattern indices of the full basis.
Analysis analyze_subsampled(const Dataset& data, const PatternBasis& basis, const std::vector<int>& subset,
                            const SolverOptions& opts = {});

}  // namespace cvxrelu
