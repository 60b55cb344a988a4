#include "cvxrelu/staircase.hpp"

#include <algorithm>
#include <cmath>

#include "cvxrelu/linalg.hpp"

namespace cvxrelu {

std::vector<std::string> flag_names(unsigned flags) {
  std::vector<std::string> out;
  if (flags & BELOW_EQUIVALENCE) out.emplace_back("BELOW_EQUIVALENCE");
  if (flags & FINITE_SET) out.emplace_back("FINITE_SET");
  if (flags & CONTINUUM_EXISTS) out.emplace_back("CONTINUUM_EXISTS");
  if (flags & ISOLATED_POINT_EXISTS) out.emplace_back("ISOLATED_POINT_EXISTS");
  if (flags & PERMUTATIONS_CONNECTED) out.emplace_back("PERMUTATIONS_CONNECTED");
  if (flags & FULLY_CONNECTED) out.emplace_back("FULLY_CONNECTED");
  return out;
}

unsigned RegimeReport::flags_for(int m) const {
  if (m_star == 0) return FINITE_SET | FULLY_CONNECTED;  // y* = 0: the zero network is the only optimum
  unsigned f = 0;
  if (m < m_star) f |= BELOW_EQUIVALENCE;
  if (m == m_star) f |= FINITE_SET;
  if (m >= m_star + 1) f |= CONTINUUM_EXISTS;
  if (m == M_star) f |= ISOLATED_POINT_EXISTS;
  if (m >= M_star + 1) f |= PERMUTATIONS_CONNECTED;
  if (m >= std::min(m_star + M_star, n + 1)) f |= FULLY_CONNECTED;
  return f;
}

namespace {

std::vector<int> support_of(const Vec& c) {
  std::vector<int> s;
  for (Eigen::Index k = 0; k < c.size(); ++k)
    if (c(k) > 0.0) s.push_back(static_cast<int>(k));
  return s;
}

Mat columns(const Mat& G, const std::vector<int>& idx) {
  Mat out(G.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t a = 0; a < idx.size(); ++a) out.col(static_cast<Eigen::Index>(a)) = G.col(idx[a]);
  return out;
}

}  // namespace

bool is_irreducible(const OptimalPolytope& poly, const Vec& c, double rank_tol) {
  const std::vector<int> s = support_of(c);
  if (s.empty()) return true;
  return numerical_rank(columns(poly.reduced_generators(), s), rank_tol) == static_cast<int>(s.size());
}

PruneResult prune_to_irreducible(const OptimalPolytope& poly, const Vec& c_in, double rank_tol) {
  if (c_in.size() != poly.size()) throw Error(ErrorCode::ShapeMismatch, "coefficient count differs from generator count");
  if (c_in.minCoeff() < 0.0) throw Error(ErrorCode::InvalidInput, "coefficients must be nonnegative");
  const Mat G = poly.reduced_generators();
  PruneResult out;
  Vec c = c_in;
  out.path.push_back(c);
  while (true) {
    const std::vector<int> s = support_of(c);
    if (s.empty()) break;
    const Mat Gs = columns(G, s);
    Eigen::JacobiSVD<Mat> svd(Gs, Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    const int rank = sv.size() == 0 || sv(0) == 0.0
                         ? 0
                         : static_cast<int>((sv.array() > rank_tol * sv(0)).count());
    if (rank == static_cast<int>(s.size())) break;
    Vec eta = svd.matrixV().col(static_cast<Eigen::Index>(s.size()) - 1);
    // Orient so the first nonzero entry decreases.
    for (Eigen::Index a = 0; a < eta.size(); ++a) {
      if (std::abs(eta(a)) > 1e-12) {
        if (eta(a) < 0.0) eta = -eta;
        break;
      }
    }
    double step = INFINITY;
    int hit = -1;
    for (Eigen::Index a = 0; a < eta.size(); ++a) {
      if (eta(a) > 1e-12) {
        const double t = c(s[static_cast<size_t>(a)]) / eta(a);
        if (t < step) {
          step = t;
          hit = static_cast<int>(a);
        }
      }
    }
    for (Eigen::Index a = 0; a < eta.size(); ++a) {
      double& ck = c(s[static_cast<size_t>(a)]);
      ck -= step * eta(a);
      if (ck < 1e-14 * std::max(1.0, c_in.maxCoeff())) ck = 0.0;
    }
    c(s[static_cast<size_t>(hit)]) = 0.0;
    out.path.push_back(c);
  }
  out.c = c;
  return out;
}

bool solve_on_support(const OptimalPolytope& poly, const std::vector<int>& support, Vec& c, double rank_tol) {
  const Mat Gs = columns(poly.reduced_generators(), support);
  const Vec t = poly.reduced_target();
  if (numerical_rank(Gs, rank_tol) != static_cast<int>(support.size())) return false;
  const Vec coef = Gs.colPivHouseholderQr().solve(t);
  const double res = (Gs * coef - t).lpNorm<Eigen::Infinity>();
  if (res > 1e-8 * std::max(1.0, t.lpNorm<Eigen::Infinity>())) return false;
  // Coefficients at the noise level of y* mean a smaller support already solves.
  if (coef.size() > 0 && !(coef.minCoeff() > 1e-6 * std::max(1.0, coef.maxCoeff()))) return false;
  c = Vec::Zero(poly.size());
  for (size_t a = 0; a < support.size(); ++a) c(support[a]) = coef(static_cast<Eigen::Index>(a));
  return true;
}

RegimeReport critical_widths(const OptimalPolytope& poly, const StaircaseOptions& opts) {
  RegimeReport rep;
  rep.n = poly.n();
  if (poly.reduced_target().lpNorm<Eigen::Infinity>() <= 1e-12) {
    rep.m_star = rep.M_star = 0;
  } else {
    // Distinct generator vectors; a repeated vector never enlarges an independent subset.
    const Mat G = poly.generator_matrix();
    std::vector<int> distinct;
    for (int k = 0; k < poly.size(); ++k) {
      bool dup = false;
      for (int q : distinct)
        if ((G.col(k) - G.col(q)).norm() <= 1e-9 * std::max(1.0, G.col(q).norm())) dup = true;
      if (!dup) distinct.push_back(k);
    }
    if (static_cast<int>(distinct.size()) > opts.max_generators)
      throw Error(ErrorCode::LimitExceeded, std::to_string(distinct.size()) +
                                                " distinct generators exceed the subset-search cap of " +
                                                std::to_string(opts.max_generators));
    const int g = static_cast<int>(distinct.size());
    const int tmax = std::min(rep.n, g);
    for (int t = 1; t <= tmax; ++t) {
      std::vector<int> pick(static_cast<size_t>(t));
      for (int a = 0; a < t; ++a) pick[static_cast<size_t>(a)] = a;
      bool found = false;
      while (!found) {
        std::vector<int> support;
        for (int a : pick) support.push_back(distinct[static_cast<size_t>(a)]);
        Vec c;
        if (solve_on_support(poly, support, c, opts.rank_tol)) {
          found = true;
          rep.accepted.push_back(t);
          rep.witnesses.push_back(support);
          break;
        }
        int a = t - 1;
        while (a >= 0 && pick[static_cast<size_t>(a)] == g - t + a) --a;
        if (a < 0) break;
        ++pick[static_cast<size_t>(a)];
        for (int b = a + 1; b < t; ++b) pick[static_cast<size_t>(b)] = pick[static_cast<size_t>(b - 1)] + 1;
      }
    }
    if (rep.accepted.empty())
      throw Error(ErrorCode::NoSolution, "no independent generator subset reproduces the optimal fit");
    rep.m_star = rep.accepted.front();
    rep.M_star = rep.accepted.back();
  }
  const int top = std::max({rep.n + 1, rep.m_star + rep.M_star, 1});
  for (int m = 1; m <= top; ++m) rep.regimes.push_back({m, rep.flags_for(m)});
  return rep;
}

}  // namespace cvxrelu
