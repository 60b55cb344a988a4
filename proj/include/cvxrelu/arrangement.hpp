#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvxrelu/types.hpp"

namespace cvxrelu {

// A sign region of the hyperplane arrangement {x_j . h = 0}: mask[j] = 1 iff x_j . h > 0.
struct ActivationPattern {
  std::vector<std::uint8_t> mask;
  Vec witness;  // strict interior point of the region

  std::string to_string() const;
  bool operator==(const ActivationPattern& o) const { return mask == o.mask; }
};

using PatternBasis = std::vector<ActivationPattern>;

// K = {u : (2D - I) X u >= 0} for a pattern D.
struct ConeHandle {
  ActivationPattern pattern;
  Mat constraints;  // rows (2 D_jj - 1) x_j

  ConeHandle() = default;
  ConeHandle(const Mat& design, const ActivationPattern& p);
  bool contains(const Vec& u, double tol = TOL_FEAS) const;
  // D X: the design with inactive rows zeroed.
  Mat masked_design(const Mat& design) const;
};

struct ArrangementOptions {
  std::size_t max_patterns = 4096;
};

// Maximal regions of the arrangement in lexicographic mask order, each with a witness.
PatternBasis enumerate_patterns(const Mat& design, const ArrangementOptions& opts = {});

// Euclidean projection onto a pattern cone (dual NNLS formulation).
Vec project_onto_cone(const ConeHandle& cone, const Vec& w);

// Upper bound on the number of regions of n central hyperplanes in R^d.
double cover_bound(int n, int d);

// Pattern 1(X w >= 0) with near-zero rows counted as active.
std::vector<std::uint8_t> closed_mask(const Mat& design, const Vec& w, double rel_tol = 1e-9);

}  // namespace cvxrelu
