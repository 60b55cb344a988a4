#pragma once

#include "cvxrelu/types.hpp"

namespace cvxrelu {

struct NnlsResult {
  Vec x;
  Vec residual;  // E x - f
  int iterations = 0;
};

// Lawson-Hanson active set: min ||E x - f|| subject to x >= 0.
// Throws NoConvergence once more than max_iter inner steps are taken.
NnlsResult nnls(const Mat& E, const Vec& f, int max_iter);

struct LdpResult {
  bool feasible = false;
  Vec h;
};

// Least distance programming: min ||h|| subject to G h >= g.
LdpResult ldp(const Mat& G, const Vec& g, int max_iter);

}  // namespace cvxrelu
