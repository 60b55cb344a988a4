#pragma once

#include <string>
#include <vector>

#include "cvxrelu/transport.hpp"

namespace cvxrelu {

// Named datasets: example1, example2, ce1, ce2, appendixH.
Dataset builtin_dataset(const std::string& name);
std::vector<std::string> builtin_names();

// Two hand-built optimal interpolators with different functions (ce1 and ce2 only).
std::vector<NetworkParams> reference_networks(const std::string& name);

struct NonuniqueClass {
  Dataset data;                 // samples in index order, x_1 < ... < x_n
  std::vector<Vec> v;           // construction vectors v_1..v_n
  std::vector<Vec> directions;  // s_1, ..., s_n, s_n - v_n
  Vec weights;                  // conic weights on the directions
  Vec predicted_nu;             // multiplier in the y* - y sign convention: -v_{i,2}
};

// Builds the non-unique interpolation class from construction vectors v_1..v_n.
NonuniqueClass generate_nonunique_class(const std::vector<Vec>& v, const Vec& weights);
// Same class from the angles of the unit partial sums s_1..s_n (s_1 at pi/6, s_n at pi/2).
NonuniqueClass generate_nonunique_class_from_angles(const std::vector<double>& angles, const Vec& weights);
std::vector<double> equally_spaced_angles(int n);

struct InterpolatorFamily {
  int dimension = 0;
  double objective = 0.0;
  Vec anchor;                  // a point of the polytope
  Mat directions;              // affine basis (columns), generator coordinates
  std::vector<Vec> vertices;   // irreducible points found (capped)
  bool vertices_complete = false;
  // Dimension one: c(t) moves from lo to hi while the reference coefficient goes t_lo -> t_hi.
  int reference = -1;
  Vec lo, hi;
  double t_lo = 0.0, t_hi = 0.0;

  Vec point(double t) const;
};

struct FamilyOptions {
  int reference = -1;      // generator used as the parameter; default: smallest nonzero step entry
  int max_vertices = 64;
  int max_generators = 22;
};

InterpolatorFamily optimal_interpolator_family(const OptimalPolytope& poly, const FamilyOptions& opts = {});

// Network predictions on raw input rows (bias appended when has_bias).
Vec eval_model(const NetworkParams& params, bool has_bias, const Mat& probes);

}  // namespace cvxrelu
