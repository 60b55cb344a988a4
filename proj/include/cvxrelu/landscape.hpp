#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cvxrelu/interpolators.hpp"

namespace cvxrelu {

struct GDConfig {
  int m = 3;
  double lr = 1e-2;
  int steps = 20000;
  std::uint64_t seed = 0;
  double beta = 0.0;        // <= 0 uses the dataset beta
  double init_scale = 0.5;  // uniform initialization on [-init_scale, init_scale]
  int record_every = 100;
};

struct GDTrace {
  NetworkParams params;
  std::vector<std::pair<int, double>> objective;  // (step, regularized squared loss)
  double final_objective = 0.0;
};

// Full-batch gradient descent on the regularized squared loss (ReLU'(0) = 0).
GDTrace train_nonconvex_gd(const Dataset& data, const GDConfig& cfg);
GDTrace gradient_descent(const Dataset& data, const NetworkParams& init, const GDConfig& cfg);
NetworkParams random_network(const Dataset& data, int m, std::uint64_t seed, double scale);

// Squared-loss copy of a dataset with the given weight decay.
Dataset regression_view(const Dataset& data, double beta);

enum class SliceKind { M1, M2, M3 };
SliceKind parse_slice(const std::string& s);
const char* slice_name(SliceKind k);

struct SliceGrid {
  SliceKind kind = SliceKind::M1;
  double beta = 0.1;
  Vec t, s;
  Mat values;  // values(i, j) = F(t_i, s_j)
  double optimal_value = 0.0;
  std::vector<std::pair<double, double>> optima;  // analytic optimal points sampled on the slice
};

struct SliceOptions {
  // Zero counts and empty ranges select the defaults of each slice.
  int nt = 0;
  int ns = 0;
  std::pair<double, double> t_range{0.0, 0.0};
  std::pair<double, double> s_range{0.0, 0.0};
};

SliceGrid landscape_slice(SliceKind kind, double beta, const SliceOptions& opts = {});
// Loss of the two-sample toy problem evaluated at first layer U (2 x m) and second layer v.
double toy_loss(const Mat& U, const Vec& v, double beta);

struct SliceCheck {
  bool pass = false;
  double grid_min = 0.0;
  double worst_gap = 0.0;  // largest distance (in cells) from an analytic optimum to a grid local minimum
  std::string reason;
};
// Every analytic optimum has a grid local minimum within one cell, and the grid minimum is near one.
SliceCheck check_slice(const SliceGrid& g);

struct DemoResult {
  ParameterPath path;
  std::vector<double> objectives;
  double max_increase = 0.0;
  bool nonincreasing = false;
};

// Descends from start, snaps to the optimal set and transports to target without raising the loss.
DemoResult nonincreasing_demo(const Dataset& data, const NetworkParams& start, const NetworkParams& target,
                              const GDConfig& cfg);

// Nearest optimal network sharing the neuron-to-direction assignment of params.
NetworkParams snap_to_optimal(const OptimalPolytope& poly, const NetworkParams& params);

}  // namespace cvxrelu
