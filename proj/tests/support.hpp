#pragma once

// Independent oracles and shared property checks for the test binaries and the acceptance run.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cvxrelu/report.hpp"

namespace testsupport {

using cvxrelu::Mat;
using cvxrelu::Vec;

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline std::string mask_str(const std::vector<std::uint8_t>& m) {
  std::string s;
  for (auto b : m) s += b ? '1' : '0';
  return s;
}

// Patterns of a two-column design by sweeping the circle: one probe between consecutive critical angles.
inline std::set<std::string> sweep_patterns_2d(const Mat& X) {
  std::vector<double> crit;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double a = std::atan2(X(i, 1), X(i, 0));
    for (double off : {M_PI / 2.0, -M_PI / 2.0}) {
      double t = a + off;
      while (t < 0) t += 2 * M_PI;
      while (t >= 2 * M_PI) t -= 2 * M_PI;
      crit.push_back(t);
    }
  }
  std::sort(crit.begin(), crit.end());
  std::set<std::string> out;
  for (size_t k = 0; k < crit.size(); ++k) {
    const double a = crit[k];
    const double b = k + 1 < crit.size() ? crit[k + 1] : crit[0] + 2 * M_PI;
    if (b - a < 1e-12) continue;
    const double t = 0.5 * (a + b);
    Vec h(2);
    h << std::cos(t), std::sin(t);
    const Vec s = X * h;
    std::string m;
    for (Eigen::Index i = 0; i < s.size(); ++i) m += s(i) > 0 ? '1' : '0';
    out.insert(m);
  }
  return out;
}

// Projection onto {u : A u >= 0} by trying every set of rows held at equality.
inline Vec brute_project(const Mat& A, const Vec& w) {
  const int r = static_cast<int>(A.rows());
  Vec best = Vec::Zero(w.size());
  double best_d = (w - best).norm();
  for (int mask = 0; mask < (1 << r); ++mask) {
    std::vector<int> rows;
    for (int i = 0; i < r; ++i)
      if (mask >> i & 1) rows.push_back(i);
    Vec p = w;
    if (!rows.empty()) {
      Mat As(static_cast<Eigen::Index>(rows.size()), A.cols());
      for (size_t a = 0; a < rows.size(); ++a) As.row(static_cast<Eigen::Index>(a)) = A.row(rows[a]);
      Eigen::FullPivLU<Mat> lu(As);
      const Mat N = lu.kernel();
      if (lu.rank() == A.cols()) {
        p = Vec::Zero(w.size());
      } else {
        const Mat Q = N.householderQr().householderQ() * Mat::Identity(N.rows(), N.cols());
        p = Q * (Q.transpose() * w);
      }
    }
    if ((A * p).minCoeff() < -1e-12) continue;
    const double d = (w - p).norm();
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

// Lasso over a fixed set of unit first-layer directions (angles) of a two-column design, solved by
// cyclic coordinate descent on one scalar per direction. Returns the objective and the coefficients.
inline double fan_lasso(const Mat& X, const Vec& y, double beta, const std::vector<double>& angles, int sweeps,
                        Vec& a) {
  const int m = static_cast<int>(angles.size());
  Mat F(X.rows(), m);
  for (int k = 0; k < m; ++k) {
    Vec h(2);
    h << std::cos(angles[static_cast<size_t>(k)]), std::sin(angles[static_cast<size_t>(k)]);
    F.col(k) = (X * h).cwiseMax(0.0);
  }
  const Vec sq = F.colwise().squaredNorm().transpose();
  a = Vec::Zero(m);
  Vec r = -y;  // F a - y
  auto value = [&]() { return 0.5 * r.squaredNorm() + beta * a.lpNorm<1>(); };
  double prev = value();
  for (int s = 0; s < sweeps; ++s) {
    for (int k = 0; k < m; ++k) {
      if (sq(k) == 0.0) continue;
      const double z = a(k) - F.col(k).dot(r) / sq(k);
      const double thr = beta / sq(k);
      const double nk = z > thr ? z - thr : (z < -thr ? z + thr : 0.0);
      if (nk != a(k)) {
        r += (nk - a(k)) * F.col(k);
        a(k) = nk;
      }
    }
    const double v = value();
    if (prev - v < 1e-14) break;
    prev = v;
  }
  return value();
}

// Regression optimum estimated from a dense fan of directions, then polished by moving each used
// direction continuously: golden-section search on its angle with the coefficient in closed form.
// Every value returned belongs to an actual network, so it bounds the true optimum from above.
inline double lasso_oracle(const Mat& X, const Vec& y, double beta, int ndirs = 2048) {
  std::vector<double> angles(static_cast<size_t>(ndirs));
  for (int k = 0; k < ndirs; ++k) angles[static_cast<size_t>(k)] = 2 * M_PI * k / ndirs;
  const double step = 2 * M_PI / ndirs;
  Vec a;
  const double coarse = fan_lasso(X, y, beta, angles, 4000, a);

  // Group consecutive used directions of equal sign into single neurons.
  struct Unit {
    double theta, coef;
  };
  std::vector<Unit> units;
  int first = -1;
  for (int k = 0; k < ndirs && first < 0; ++k)
    if (a(k) != 0.0 && a((k + ndirs - 1) % ndirs) == 0.0) first = k;
  if (first < 0) {
    for (int k = 0; k < ndirs && first < 0; ++k)
      if (a(k) != 0.0) first = k;
  }
  if (first < 0) return coarse;
  double wsum = 0.0, tsum = 0.0, csum = 0.0;
  int prev_sign = 0;
  for (int q = 0; q <= ndirs; ++q) {
    const int k = (first + q) % ndirs;
    const double v = q == ndirs ? 0.0 : a(k);
    const int sg = v > 0 ? 1 : (v < 0 ? -1 : 0);
    if ((sg != prev_sign) && wsum > 0.0) {
      units.push_back({tsum / wsum, csum});
      wsum = tsum = csum = 0.0;
    }
    if (sg != 0) {
      const double ang = 2 * M_PI * (first + q) / ndirs;  // unwrapped so clusters stay contiguous
      wsum += std::abs(v);
      tsum += std::abs(v) * ang;
      csum += v;
    }
    prev_sign = sg;
  }

  auto feature = [&](double t) {
    Vec h(2);
    h << std::cos(t), std::sin(t);
    return Vec((X * h).cwiseMax(0.0));
  };
  auto total = [&]() {
    Vec f = Vec::Zero(X.rows());
    double reg = 0.0;
    for (const auto& u : units) {
      f += u.coef * feature(u.theta);
      reg += std::abs(u.coef);
    }
    return 0.5 * (f - y).squaredNorm() + beta * reg;
  };
  // Best value and coefficient of one unit against a residual target.
  auto fit_one = [&](double t, const Vec& r, double& coef) {
    const Vec f = feature(t);
    const double sq = f.squaredNorm();
    if (sq == 0.0) {
      coef = 0.0;
      return 0.5 * r.squaredNorm();
    }
    const double z = f.dot(r);
    coef = z > beta ? (z - beta) / sq : (z < -beta ? (z + beta) / sq : 0.0);
    return 0.5 * (coef * f - r).squaredNorm() + beta * std::abs(coef);
  };
  double best = std::min(coarse, total());
  double width = 4 * step;
  for (int round = 0; round < 60; ++round) {
    for (size_t j = 0; j < units.size(); ++j) {
      Vec r = y;
      for (size_t i = 0; i < units.size(); ++i)
        if (i != j) r -= units[i].coef * feature(units[i].theta);
      double lo = units[j].theta - width, hi = units[j].theta + width, c;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      double f1 = fit_one(x1, r, c), f2 = fit_one(x2, r, c);
      for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - g * (hi - lo);
          f1 = fit_one(x1, r, c);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + g * (hi - lo);
          f2 = fit_one(x2, r, c);
        }
      }
      const double t = 0.5 * (lo + hi);
      const double cur = fit_one(units[j].theta, r, c);
      double nc;
      if (fit_one(t, r, nc) < cur) {
        units[j].theta = t;
        units[j].coef = nc;
      } else {
        units[j].coef = c;
      }
    }
    best = std::min(best, total());
    width = std::max(width * 0.7, 1e-9);
  }
  return best;
}

struct SubsetWidths {
  int m_star = -1, M_star = -1;
};

// Smallest and largest independent generator subsets carrying positive coefficients onto the target.
inline SubsetWidths brute_widths(const Mat& G, const Vec& target) {
  SubsetWidths w;
  const int K = static_cast<int>(G.cols());
  for (int mask = 1; mask < (1 << K); ++mask) {
    std::vector<int> cols;
    for (int k = 0; k < K; ++k)
      if (mask >> k & 1) cols.push_back(k);
    Mat Gs(G.rows(), static_cast<Eigen::Index>(cols.size()));
    for (size_t a = 0; a < cols.size(); ++a) Gs.col(static_cast<Eigen::Index>(a)) = G.col(cols[a]);
    Eigen::FullPivLU<Mat> lu(Gs);
    lu.setThreshold(1e-9);
    if (lu.rank() != static_cast<int>(cols.size())) continue;
    const Vec c = Gs.fullPivHouseholderQr().solve(target);
    if ((Gs * c - target).norm() > 1e-7 * std::max(1.0, target.norm())) continue;
    if (c.minCoeff() <= 1e-6 * std::max(1.0, c.maxCoeff())) continue;
    const int t = static_cast<int>(cols.size());
    if (w.m_star < 0 || t < w.m_star) w.m_star = t;
    w.M_star = std::max(w.M_star, t);
  }
  return w;
}

// Random regression instance with n samples, raw dimension d (1 or 2); one-dimensional inputs get a bias.
inline cvxrelu::Dataset random_instance(std::mt19937_64& rng, int n, int d, double beta) {
  std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(-1.0, 1.0);
  cvxrelu::Dataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) data.x(i, k) = ux(rng);
    data.y(i) = uy(rng);
  }
  data.has_bias = d == 1;
  data.beta = beta;
  data.mode = cvxrelu::Mode::Regression;
  return data;
}

// Canonical polytope points: random convex combinations of vertices supported on canonical generators.
inline std::vector<Vec> canonical_points(const cvxrelu::OptimalPolytope& poly, std::mt19937_64& rng, int count) {
  std::vector<Vec> out;
  if (poly.size() == 0 || poly.size() > 22) return out;
  const cvxrelu::InterpolatorFamily fam = cvxrelu::optimal_interpolator_family(poly);
  std::vector<Vec> verts;
  for (const Vec& v : fam.vertices) {
    bool ok = true;
    for (int k = 0; k < poly.size(); ++k)
      if (v(k) > 0.0 && !poly.generators[static_cast<size_t>(k)].canonical) ok = false;
    if (ok) verts.push_back(v);
  }
  if (verts.empty()) return out;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int q = 0; q < count; ++q) {
    Vec c = Vec::Zero(poly.size());
    double tot = 0.0;
    for (const Vec& v : verts) {
      const double a = u(rng);
      c += a * v;
      tot += a;
    }
    out.push_back(c / tot);
  }
  return out;
}

// Same neurons up to order.
inline bool same_up_to_permutation(const cvxrelu::NetworkParams& a, const cvxrelu::NetworkParams& b, double tol) {
  if (a.width() != b.width()) return false;
  std::vector<bool> used(b.neurons.size(), false);
  for (const auto& na : a.neurons) {
    bool found = false;
    for (size_t j = 0; j < b.neurons.size() && !found; ++j) {
      if (used[j]) continue;
      const auto& nb = b.neurons[j];
      if ((na.w - nb.w).norm() <= tol && std::abs(na.alpha - nb.alpha) <= tol) {
        used[j] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  if (a.skip.size() != b.skip.size()) return false;
  return a.skip.size() == 0 || (a.skip - b.skip).norm() <= tol;
}

// Random support-reduction input: A lambda = B mu with independent A.
struct ReduceInstance {
  Mat A, B;
  std::vector<int> I;
  Vec lambda, mu;
};

inline ReduceInstance random_reduce_instance(std::mt19937_64& rng, int n, int m, int k) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> pos(0.2, 1.5);
  ReduceInstance r;
  r.A = Mat::NullaryExpr(n, m, [&]() { return g(rng); });
  r.lambda = Vec::NullaryExpr(m, [&]() { return g(rng); });
  r.I = {0};
  r.lambda(0) = std::abs(r.lambda(0)) + 0.5;
  if (m > 1) {
    r.I.push_back(1);
    r.lambda(1) = std::abs(r.lambda(1));
  }
  const Vec t = r.A * r.lambda;
  r.B = Mat::NullaryExpr(n, k, [&]() { return g(rng); });
  r.mu = Vec::NullaryExpr(k, [&]() { return pos(rng); });
  const Vec rest = r.B.leftCols(k - 1) * r.mu.head(k - 1);
  r.B.col(k - 1) = (t - rest) / r.mu(k - 1);
  return r;
}

inline double max_gap(const Vec& a, const Vec& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

}  // namespace testsupport
