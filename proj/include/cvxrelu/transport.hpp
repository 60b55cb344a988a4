#pragma once

#include <string>
#include <vector>

#include "cvxrelu/staircase.hpp"

namespace cvxrelu {

struct Neuron {
  Vec w;
  double alpha = 0.0;
  bool is_zero() const { return alpha == 0.0 || w.squaredNorm() == 0.0; }
};

// Two-layer ReLU network f(x) = skip . x + sum_j (x . w_j)_+ alpha_j on the effective design.
struct NetworkParams {
  std::vector<Neuron> neurons;
  Vec skip;  // empty without skip

  int width() const { return static_cast<int>(neurons.size()); }
  int cardinality() const;
  Vec flatten() const;
  bool operator==(const NetworkParams& o) const;
};

Vec network_output(const Mat& design, const NetworkParams& params);

// Regression: squared loss plus weight decay; interpolation: weight decay only.
double network_objective(const OptimalPolytope& poly, const NetworkParams& params);
double network_objective(const Dataset& data, const NetworkParams& params);
// Interpolation constraint violation ||f - y||_inf; zero in regression mode.
double feasibility_violation(const OptimalPolytope& poly, const NetworkParams& params);

enum class EventKind { Merge, Split, PermutationBridge, CardinalityChange, Update1, Update2Prune, Linear, Descent };
const char* event_name(EventKind k);

struct PathSample {
  double t = 0.0;
  NetworkParams params;
};

struct PathEvent {
  EventKind kind = EventKind::Linear;
  double t = 0.0;
  int sample = 0;
};

struct ParameterPath {
  std::vector<PathSample> samples;
  std::vector<PathEvent> events;
};

// Lifts a polytope point with at most m nonzero coefficients to a width-m network.
NetworkParams psi(const OptimalPolytope& poly, const Vec& c, int m);

// Sums first layers weighted by |alpha| per (activation pattern, output sign).
ConvexSolution phi(const OptimalPolytope& poly, const NetworkParams& params);

struct MergeResult {
  NetworkParams params;
  ParameterPath path;
};

// Merges neurons sharing activation pattern and output sign along a loss-preserving curve.
MergeResult merge_minimal(const OptimalPolytope& poly, const NetworkParams& params, int samples = 64);

struct ReduceResult {
  Vec mu;     // reduced nonnegative weights on B
  Vec delta;  // coordinates of B mu in the columns of A
};

// Given A lambda = B mu with independent A, sum_I lambda > 0 and mu > 0, returns mu* >= 0 with
// at most n - m + 1 nonzeros, B mu* in span(A) and positive I-part of its coordinates.
ReduceResult reduce_support(const Mat& A, const Mat& B, const std::vector<int>& I, const Vec& lambda, const Vec& mu);
bool check_reduce_support(const Mat& A, const Mat& B, const std::vector<int>& I, const ReduceResult& r,
                          double tol = 1e-9);

// Path from params to its permutation (params.neurons[sigma[j]])_j at constant loss.
ParameterPath permutation_bridge(const OptimalPolytope& poly, const NetworkParams& params,
                                 const std::vector<int>& sigma, int samples = 64);

enum class Strategy { SumWidths, NPlusOne, Auto };
const char* strategy_name(Strategy s);

struct ConnectOptions {
  int samples_per_segment = 64;
  int min_samples = 200;
};

struct ConnectResult {
  ParameterPath path;
  Strategy used = Strategy::SumWidths;
  std::vector<Vec> vertices;          // coefficient path in generator coordinates
  std::vector<double> outer_mass;     // N_PLUS_ONE: remaining start-side mass per outer iteration
};

ConnectResult connect(const OptimalPolytope& poly, const NetworkParams& a, const NetworkParams& b,
                      Strategy strategy, const ConnectOptions& opts = {});

struct VerifyOptions {
  double tol = TOL_PATH;
  double jump_cap = 0.0;  // <= 0 picks 0.25 * max(1, largest parameter norm)
};

struct PathVerification {
  bool pass = false;
  double max_deviation = 0.0;
  double max_violation = 0.0;
  double max_jump = 0.0;
  double jump_cap = 0.0;
  int samples = 0;
  std::string reason;
};

PathVerification verify_path(const OptimalPolytope& poly, const ParameterPath& path, const VerifyOptions& opts = {});

}  // namespace cvxrelu
