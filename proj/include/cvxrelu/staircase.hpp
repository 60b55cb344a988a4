#pragma once

#include <string>
#include <vector>

#include "cvxrelu/dual_polytope.hpp"

namespace cvxrelu {

enum RegimeFlag : unsigned {
  BELOW_EQUIVALENCE = 1u << 0,
  FINITE_SET = 1u << 1,
  CONTINUUM_EXISTS = 1u << 2,
  ISOLATED_POINT_EXISTS = 1u << 3,
  PERMUTATIONS_CONNECTED = 1u << 4,
  FULLY_CONNECTED = 1u << 5,
};

std::vector<std::string> flag_names(unsigned flags);

struct WidthRegime {
  int m = 0;
  unsigned flags = 0;
};

struct RegimeReport {
  int m_star = 0;  // smallest cardinality of an optimal point
  int M_star = 0;  // largest cardinality of an irreducible optimal point
  int n = 0;
  std::vector<int> accepted;   // cardinalities with an irreducible optimal point
  std::vector<std::vector<int>> witnesses;  // one supporting generator subset per accepted cardinality
  std::vector<WidthRegime> regimes;

  unsigned flags_for(int m) const;
};

struct StaircaseOptions {
  int max_generators = 22;
  double rank_tol = 1e-9;
};

// Support of c is linearly independent (after projecting out the skip range).
bool is_irreducible(const OptimalPolytope& poly, const Vec& c, double rank_tol = 1e-9);

struct PruneResult {
  Vec c;
  std::vector<Vec> path;  // piecewise-linear vertices, starting at the input point
};

PruneResult prune_to_irreducible(const OptimalPolytope& poly, const Vec& c, double rank_tol = 1e-9);

RegimeReport critical_widths(const OptimalPolytope& poly, const StaircaseOptions& opts = {});

// Positive coefficients on a given independent generator subset reproducing y*, if any.
bool solve_on_support(const OptimalPolytope& poly, const std::vector<int>& support, Vec& c,
                      double rank_tol = 1e-9);

}  // namespace cvxrelu
