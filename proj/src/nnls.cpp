#include "cvxrelu/nnls.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace cvxrelu {

namespace {

// Least squares restricted to the passive columns; other entries are zero.
Vec passive_solve(const Mat& E, const Vec& f, const std::vector<char>& passive) {
  std::vector<int> idx;
  for (int j = 0; j < static_cast<int>(passive.size()); ++j)
    if (passive[j]) idx.push_back(j);
  Vec z = Vec::Zero(E.cols());
  if (idx.empty()) return z;
  Mat Ep(E.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) Ep.col(static_cast<Eigen::Index>(k)) = E.col(idx[k]);
  Vec zp = Ep.colPivHouseholderQr().solve(f);
  for (size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
  return z;
}

}  // namespace

NnlsResult nnls(const Mat& E, const Vec& f, int max_iter) {
  const Eigen::Index n = E.cols();
  NnlsResult out;
  out.x = Vec::Zero(n);
  std::vector<char> passive(static_cast<size_t>(n), 0);
  std::vector<char> blocked(static_cast<size_t>(n), 0);
  const double scale = std::max(1.0, E.norm()) * std::max(1.0, f.norm());
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * scale;

  Vec r = f;
  Vec w = E.transpose() * r;
  int iter = 0;
  while (true) {
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[j] || blocked[j]) continue;
      if (w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[best] = 1;

    bool first = true;
    while (true) {
      if (++iter > max_iter)
        throw Error(ErrorCode::NoConvergence, "nonnegative least squares exceeded its iteration budget");
      Vec z = passive_solve(E, f, passive);
      if (first && z(best) <= 0.0) {
        // Rounding made the entering column useless; skip it until x moves.
        passive[best] = 0;
        blocked[best] = 1;
        break;
      }
      first = false;
      bool ok = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && z(j) <= 0.0) ok = false;
      if (ok) {
        out.x = z;
        std::fill(blocked.begin(), blocked.end(), 0);
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && z(j) <= 0.0) {
          double a = out.x(j) / (out.x(j) - z(j));
          if (a < alpha) alpha = a;
        }
      }
      out.x += alpha * (z - out.x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && out.x(j) <= 1e-300) {
          passive[j] = 0;
          out.x(j) = 0.0;
        }
      }
      std::fill(blocked.begin(), blocked.end(), 0);
    }
    r = f - E * out.x;
    w = E.transpose() * r;
  }
  out.residual = E * out.x - f;
  out.iterations = iter;
  return out;
}

LdpResult ldp(const Mat& G, const Vec& g, int max_iter) {
  const Eigen::Index d = G.cols();
  Mat E(d + 1, G.rows());
  E.topRows(d) = G.transpose();
  E.row(d) = g.transpose();
  Vec f = Vec::Zero(d + 1);
  f(d) = 1.0;
  NnlsResult sol = nnls(E, f, max_iter);
  LdpResult out;
  const double last = sol.residual(d);
  if (sol.residual.norm() <= 1e-12 || last > -1e-12) {
    out.feasible = false;
    out.h = Vec::Zero(d);
    return out;
  }
  out.feasible = true;
  out.h = -sol.residual.head(d) / last;
  return out;
}

}  // namespace cvxrelu
