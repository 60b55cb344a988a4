#include "cvxrelu/interpolators.hpp"

#include <algorithm>
#include <cmath>

#include "cvxrelu/linalg.hpp"

namespace cvxrelu {

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"example1", "example2", "ce1", "ce2", "appendixH"}; }

Dataset builtin_dataset(const std::string& name) {
  const double r3 = std::sqrt(3.0);
  Dataset d;
  if (name == "example1" || name == "appendixH") {
    d.x.resize(2, 1);
    d.x << -r3, r3;
    d.has_bias = true;
    if (name == "example1") {
      d.y = vec2(1.0, 1.0);
      d.beta = 0.1;
      d.mode = Mode::Regression;
    } else {
      d.y = vec2(0.5, 1.5);
      d.mode = Mode::Interpolation;
    }
  } else if (name == "example2") {
    Vec w = Vec::Zero(6);
    w(0) = w(2) = w(4) = 20.0;
    NonuniqueClass cls = generate_nonunique_class_from_angles(equally_spaced_angles(5), w);
    d = cls.data;
    // Listed with the largest sample first.
    d.x = d.x.colwise().reverse().eval();
    d.y = d.y.reverse().eval();
  } else if (name == "ce1") {
    d.x.resize(3, 2);
    d.x << 1.0, 0.0, -0.5, r3 / 2.0, -0.5, -r3 / 2.0;
    d.y.resize(3);
    d.y << 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0;
    d.mode = Mode::Interpolation;
    d.has_skip = true;
  } else if (name == "ce2") {
    d.x.resize(4, 2);
    d.x << 1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0;
    d.y.resize(4);
    d.y << 1.0, -1.0, 1.0, -1.0;
    d.mode = Mode::Interpolation;
    d.has_skip = true;
    d.has_bias = true;
  } else {
    throw Error(ErrorCode::InvalidInput, "unknown builtin dataset '" + name + "'");
  }
  return d;
}

std::vector<NetworkParams> reference_networks(const std::string& name) {
  const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0);
  std::vector<NetworkParams> out(2);
  if (name == "ce1") {
    out[0].skip = vec2(-1.0 / 3.0, 0.0);
    out[0].neurons = {Neuron{vec2(1.0, 0.0) / r2, 1.0 / r2}, Neuron{vec2(-0.5, r3 / 2.0) / r2, 1.0 / r2}};
    out[1].skip = -vec2(-0.5, -r3 / 2.0) / 3.0;
    out[1].neurons = {Neuron{vec2(-0.5, -r3 / 2.0) / r2, 1.0 / r2}, Neuron{vec2(-0.5, r3 / 2.0) / r2, 1.0 / r2}};
  } else if (name == "ce2") {
    out[0].skip = vec3(0.0, 0.0, 1.0);
    out[0].neurons = {Neuron{vec3(0.0, r2, 0.0), -r2}, Neuron{vec3(0.0, -r2, 0.0), -r2}};
    out[1].skip = vec3(0.0, 0.0, -1.0);
    out[1].neurons = {Neuron{vec3(r2, 0.0, 0.0), r2}, Neuron{vec3(-r2, 0.0, 0.0), r2}};
  } else {
    throw Error(ErrorCode::InvalidInput, "no reference networks for '" + name + "'");
  }
  return out;
}

std::vector<double> equally_spaced_angles(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidGeometry, "class needs at least one sample");
  std::vector<double> a(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k)
    a[static_cast<size_t>(k)] = n == 1 ? M_PI / 2.0 : M_PI / 6.0 + k * (M_PI / 3.0) / (n - 1);
  return a;
}

NonuniqueClass generate_nonunique_class(const std::vector<Vec>& v, const Vec& weights) {
  const int n = static_cast<int>(v.size());
  const double tol = 1e-12;
  if (n < 2) throw Error(ErrorCode::InvalidGeometry, "class needs at least two samples");
  for (const Vec& vi : v)
    if (vi.size() != 2) throw Error(ErrorCode::InvalidGeometry, "construction vectors must be 2-vectors");
  if (weights.size() != n + 1)
    throw Error(ErrorCode::InvalidInput, "expected " + std::to_string(n + 1) + " conic weights");
  if (weights.minCoeff() < 0.0 || weights.maxCoeff() <= 0.0)
    throw Error(ErrorCode::InvalidInput, "conic weights must be nonnegative and not all zero");
  const Vec& vn = v[static_cast<size_t>(n - 1)];
  if (std::abs(vn(0) - std::sqrt(3.0) / 2.0) > tol || std::abs(vn(1) - 0.5) > tol)
    throw Error(ErrorCode::InvalidGeometry, "v_n must equal (sqrt(3)/2, 1/2)");
  for (int i = 0; i < n; ++i)
    if (!(v[static_cast<size_t>(i)](1) > tol))
      throw Error(ErrorCode::InvalidGeometry, "v_" + std::to_string(i + 1) + " must have positive second entry");
  NonuniqueClass cls;
  cls.v = v;
  Vec s = Vec::Zero(2);
  for (int k = 1; k <= n; ++k) {
    s += v[static_cast<size_t>(n - k)];
    if (std::abs(s.norm() - 1.0) > tol)
      throw Error(ErrorCode::InvalidGeometry, "partial sum s_" + std::to_string(k) + " is not a unit vector");
    if (k < n && !(s(0) > tol && s(1) > tol))
      throw Error(ErrorCode::InvalidGeometry, "partial sum s_" + std::to_string(k) + " is not strictly positive");
    cls.directions.push_back(s);
  }
  if (std::abs(s(0)) > tol || std::abs(s(1) - 1.0) > tol)
    throw Error(ErrorCode::InvalidGeometry, "s_n must equal (0, 1)");
  cls.directions.push_back(s - vn);

  Dataset& d = cls.data;
  d.x.resize(n, 1);
  cls.predicted_nu.resize(n);
  for (int i = 0; i < n; ++i) {
    d.x(i, 0) = v[static_cast<size_t>(i)](0) / v[static_cast<size_t>(i)](1);
    cls.predicted_nu(i) = -v[static_cast<size_t>(i)](1);
  }
  d.has_bias = true;
  d.mode = Mode::Interpolation;
  const Mat X = d.design();
  d.y = Vec::Zero(n);
  for (int k = 0; k <= n; ++k) d.y += weights(k) * (X * cls.directions[static_cast<size_t>(k)]).cwiseMax(0.0);
  cls.weights = weights;
  return cls;
}

NonuniqueClass generate_nonunique_class_from_angles(const std::vector<double>& angles, const Vec& weights) {
  const int n = static_cast<int>(angles.size());
  if (n < 2) throw Error(ErrorCode::InvalidGeometry, "class needs at least two samples");
  std::vector<Vec> s(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) s[static_cast<size_t>(k)] = vec2(std::cos(angles[static_cast<size_t>(k)]), std::sin(angles[static_cast<size_t>(k)]));
  // Pin the endpoints exactly so the premises hold to rounding.
  if (std::abs(angles.front() - M_PI / 6.0) < 1e-12) s.front() = vec2(std::sqrt(3.0) / 2.0, 0.5);
  if (std::abs(angles.back() - M_PI / 2.0) < 1e-12) s.back() = vec2(0.0, 1.0);
  // s_k = v_n + ... + v_{n-k+1}, so v_{n-k+1} = s_k - s_{k-1}.
  std::vector<Vec> v(static_cast<size_t>(n));
  for (int k = 1; k <= n; ++k)
    v[static_cast<size_t>(n - k)] = s[static_cast<size_t>(k - 1)] - (k > 1 ? s[static_cast<size_t>(k - 2)] : Vec(Vec::Zero(2)));
  return generate_nonunique_class(v, weights);
}

Vec InterpolatorFamily::point(double t) const {
  if (dimension == 0 || lo.size() == 0) return anchor;
  if (t_hi == t_lo) return lo;
  return lo + (t - t_lo) / (t_hi - t_lo) * (hi - lo);
}

InterpolatorFamily optimal_interpolator_family(const OptimalPolytope& poly, const FamilyOptions& opts) {
  InterpolatorFamily fam;
  fam.objective = poly.optimal_value;
  const int K = poly.size();
  const Mat G = poly.reduced_generators();
  const Vec target = poly.reduced_target();

  // Vertices are the positive solutions on independent generator subsets.
  std::vector<Vec> verts;
  bool complete = K <= opts.max_generators;
  if (target.size() == 0 || target.lpNorm<Eigen::Infinity>() <= 1e-12) {
    verts.push_back(Vec::Zero(K));
  } else if (complete) {
    const int r = numerical_rank(G);
    for (int t = 1; t <= std::min(r, K) && complete; ++t) {
      std::vector<int> pick(static_cast<size_t>(t));
      for (int a = 0; a < t; ++a) pick[static_cast<size_t>(a)] = a;
      while (true) {
        Vec c;
        if (solve_on_support(poly, pick, c)) {
          verts.push_back(c);
          if (static_cast<int>(verts.size()) >= opts.max_vertices) {
            complete = false;
            break;
          }
        }
        int a = t - 1;
        while (a >= 0 && pick[static_cast<size_t>(a)] == K - t + a) --a;
        if (a < 0) break;
        ++pick[static_cast<size_t>(a)];
        for (int b = a + 1; b < t; ++b) pick[static_cast<size_t>(b)] = pick[static_cast<size_t>(b - 1)] + 1;
      }
    }
  }
  fam.vertices = verts;
  fam.vertices_complete = complete;
  if (verts.empty()) throw Error(ErrorCode::NoSolution, "no vertex of the optimal polytope was found");
  fam.anchor = verts.front();

  if (complete) {
    Mat diffs(K, static_cast<Eigen::Index>(verts.size()) - 1);
    for (size_t q = 1; q < verts.size(); ++q) diffs.col(static_cast<Eigen::Index>(q) - 1) = verts[q] - verts[0];
    fam.directions = range_basis(diffs);
  } else {
    // Affine hull of the face: null directions of the generators on coordinates seen positive.
    std::vector<int> live;
    for (int k = 0; k < K; ++k)
      for (const Vec& v : verts)
        if (v(k) > 0.0) {
          live.push_back(k);
          break;
        }
    Mat Gl(G.rows(), static_cast<Eigen::Index>(live.size()));
    for (size_t a = 0; a < live.size(); ++a) Gl.col(static_cast<Eigen::Index>(a)) = G.col(live[a]);
    const Mat N = null_space(Gl);
    fam.directions = Mat::Zero(K, N.cols());
    for (size_t a = 0; a < live.size(); ++a) fam.directions.row(live[a]) = N.row(static_cast<Eigen::Index>(a));
  }
  fam.dimension = static_cast<int>(fam.directions.cols());

  if (fam.dimension == 1 && verts.size() >= 2) {
    // Endpoints are the two extreme vertices along the single direction.
    const Vec dir = fam.directions.col(0);
    size_t imin = 0, imax = 0;
    for (size_t q = 0; q < verts.size(); ++q) {
      if (verts[q].dot(dir) < verts[imin].dot(dir)) imin = q;
      if (verts[q].dot(dir) > verts[imax].dot(dir)) imax = q;
    }
    Vec a = verts[imin], b = verts[imax];
    const Vec step = b - a;
    int ref = opts.reference;
    if (ref < 0) {
      double best = INFINITY;
      for (int k = 0; k < K; ++k) {
        const double e = std::abs(step(k));
        if (e > 1e-12 * step.lpNorm<Eigen::Infinity>() && (ref < 0 || e < best * (1.0 - 1e-12))) {
          best = e;
          ref = k;
        }
      }
    }
    if (ref < 0 || ref >= K) throw Error(ErrorCode::InvalidInput, "reference generator out of range");
    if (step(ref) < 0.0) std::swap(a, b);
    fam.reference = ref;
    fam.lo = a;
    fam.hi = b;
    fam.t_lo = a(ref);
    fam.t_hi = b(ref);
  } else if (fam.dimension == 0) {
    fam.lo = fam.hi = fam.anchor;
  }
  return fam;
}

Vec eval_model(const NetworkParams& params, bool has_bias, const Mat& probes) {
  Mat X = probes;
  if (has_bias) {
    X.conservativeResize(probes.rows(), probes.cols() + 1);
    X.col(probes.cols()).setOnes();
  }
  return network_output(X, params);
}

}  // namespace cvxrelu
