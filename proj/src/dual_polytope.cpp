#include "cvxrelu/dual_polytope.hpp"

#include <algorithm>
#include <cmath>

#include "cvxrelu/linalg.hpp"
#include "cvxrelu/nnls.hpp"

namespace cvxrelu {

namespace {

Vec masked(const ActivationPattern& p, const Vec& z) {
  Vec out = z;
  for (Eigen::Index j = 0; j < z.size(); ++j)
    if (!p.mask[static_cast<size_t>(j)]) out(j) = 0.0;
  return out;
}

double loss_value(Mode mode, const Vec& fit, const Vec& y) {
  return mode == Mode::Regression ? 0.5 * (fit - y).squaredNorm() : 0.0;
}

}  // namespace

Mat OptimalPolytope::generator_matrix() const {
  Mat G(n(), size());
  for (int k = 0; k < size(); ++k) G.col(k) = generators[static_cast<size_t>(k)].vector;
  return G;
}

Mat OptimalPolytope::reducer() const {
  if (!has_skip) return Mat::Identity(n(), n());
  const Mat P = complement_projector(design, n());
  return range_basis(P).transpose();
}

Mat OptimalPolytope::reduced_generators() const { return reducer() * generator_matrix(); }

Vec OptimalPolytope::reduced_target() const { return reducer() * y_star; }

Vec OptimalPolytope::skip_for(const Vec& c) const {
  if (!has_skip) return Vec();
  return least_squares(design, y_star - generator_matrix() * c);
}

double OptimalPolytope::value_of(const Vec& c) const {
  return loss_value(mode, y_star, y) + weight * c.sum();
}

double OptimalPolytope::residual_of(const Vec& c) const {
  Vec fit = generator_matrix() * c;
  if (has_skip) fit += design * skip_for(c);
  return (fit - y_star).lpNorm<Eigen::Infinity>();
}

DualCertificate extract_dual(const Dataset& data, const PatternBasis& basis, const SolveReport& rep) {
  const Mat X = data.design();
  const std::vector<ConeHandle> cones = make_cones(X, basis);
  DualCertificate cert;
  cert.primal_value = rep.primal_value;
  if (data.mode == Mode::Regression) {
    cert.y_star = rep.solution.fit;
    Vec nu = cert.y_star - data.y;
    const DualValue dv = evaluate_dual(data, cones, nu);
    if (dv.max_ratio > 1.0 + TOL_DIR)
      throw Error(ErrorCode::CertificateFailed,
                  "residual violates the dual constraint by " + std::to_string(dv.max_ratio - 1.0));
    cert.nu = dv.nu;
    cert.dual_value = dv.value;
    cert.max_ratio = std::min(dv.max_ratio, 1.0);
  } else {
    cert.y_star = data.y;
    const DualValue dv = evaluate_dual(data, cones, rep.multiplier);
    cert.nu = dv.nu;
    cert.dual_value = dv.value;
    cert.max_ratio = dv.max_ratio > 0.0 ? 1.0 : 0.0;
  }
  if (data.has_skip && (X.transpose() * cert.nu).lpNorm<Eigen::Infinity>() > TOL_DIR)
    throw Error(ErrorCode::CertificateFailed, "multiplier is not orthogonal to the skip range");
  cert.gap = cert.primal_value - cert.dual_value;
  if (!(std::abs(cert.gap) <= TOL_DUAL * std::max(1.0, std::abs(cert.primal_value))))
    throw Error(ErrorCode::CertificateFailed, "duality gap " + std::to_string(cert.gap) + " exceeds tolerance");
  return cert;
}

std::vector<Generator> optimal_directions(const Dataset& data, const PatternBasis& basis,
                                          const DualCertificate& cert) {
  const Mat X = data.design();
  const double weight = data.weight();
  std::vector<Generator> plus, minus;
  for (size_t i = 0; i < basis.size(); ++i) {
    const ConeHandle cone(X, basis[i]);
    const Vec a = X.transpose() * masked(basis[i], cert.nu);
    if (a.squaredNorm() == 0.0) continue;
    for (int s : {1, -1}) {
      const Vec q = project_onto_cone(cone, -s * a);
      const double nq = q.norm();
      if (std::abs(nq / weight - 1.0) > TOL_DIR) continue;
      Generator g;
      g.pattern = static_cast<int>(i);
      g.sign = s;
      g.direction = q / nq;
      g.vector = s * masked(basis[i], X * g.direction);
      g.canonical = closed_mask(X, g.direction) == basis[i].mask;
      (s > 0 ? plus : minus).push_back(std::move(g));
    }
  }
  plus.insert(plus.end(), minus.begin(), minus.end());
  return plus;
}

OptimalPolytope build_polytope(const Dataset& data, const PatternBasis& basis, const DualCertificate& cert) {
  OptimalPolytope poly;
  poly.mode = data.mode;
  poly.weight = data.weight();
  poly.has_skip = data.has_skip;
  poly.design = data.design();
  poly.y = data.y;
  poly.y_star = cert.y_star;
  poly.nu = cert.nu;
  poly.basis = basis;
  poly.generators = optimal_directions(data, basis, cert);
  // The regularizer sum is constant on the polytope: nu . g = -weight for every generator.
  const double mass = -cert.nu.dot(cert.y_star) / poly.weight;
  poly.optimal_value = loss_value(data.mode, cert.y_star, data.y) + poly.weight * mass;
  return poly;
}

PolytopePoint decompose(const OptimalPolytope& poly, const ConvexSolution& sol) {
  const size_t P = poly.basis.size();
  if (sol.u.size() != P || sol.v.size() != P)
    throw Error(ErrorCode::ShapeMismatch, "solution block count differs from pattern count");
  double top = 0.0;
  for (size_t i = 0; i < P; ++i) top = std::max({top, sol.u[i].norm(), sol.v[i].norm()});
  const double zero_tol = 1e-9 * std::max(1.0, top);

  std::vector<int> lookup_plus(P, -1), lookup_minus(P, -1);
  for (int k = 0; k < poly.size(); ++k) {
    const Generator& g = poly.generators[static_cast<size_t>(k)];
    (g.sign > 0 ? lookup_plus : lookup_minus)[static_cast<size_t>(g.pattern)] = k;
  }

  PolytopePoint pt;
  pt.c = Vec::Zero(poly.size());
  for (size_t i = 0; i < P; ++i) {
    for (int s : {1, -1}) {
      const Vec& block = s > 0 ? sol.u[i] : sol.v[i];
      const double nb = block.norm();
      if (nb <= zero_tol) continue;
      const int k = (s > 0 ? lookup_plus : lookup_minus)[i];
      if (k < 0)
        throw Error(ErrorCode::NotOptimal, "pattern " + poly.basis[i].to_string() +
                                               " carries mass but has no optimal direction");
      const Vec& dir = poly.generators[static_cast<size_t>(k)].direction;
      const double cosang = std::clamp(block.dot(dir) / nb, -1.0, 1.0);
      if (std::acos(cosang) > 1e-6)
        throw Error(ErrorCode::NotOptimal, "block of pattern " + poly.basis[i].to_string() +
                                               " is misaligned with its optimal direction");
      pt.c(k) += nb;
    }
  }
  Vec fit = poly.generator_matrix() * pt.c;
  if (poly.has_skip) {
    if (sol.skip.size() != poly.design.cols())
      throw Error(ErrorCode::ShapeMismatch, "skip block missing or of wrong width");
    pt.skip = sol.skip;
    fit += poly.design * sol.skip;
  }
  const double res = (fit - poly.y_star).lpNorm<Eigen::Infinity>();
  if (res > 1e-8 * std::max(1.0, poly.y_star.lpNorm<Eigen::Infinity>()))
    throw Error(ErrorCode::NotOptimal, "decomposition misses the optimal fit by " + std::to_string(res));
  return pt;
}

ConvexSolution to_solution(const OptimalPolytope& poly, const Vec& c) {
  const size_t P = poly.basis.size();
  const int d = static_cast<int>(poly.design.cols());
  ConvexSolution sol;
  sol.u.assign(P, Vec::Zero(d));
  sol.v.assign(P, Vec::Zero(d));
  for (int k = 0; k < poly.size(); ++k) {
    const Generator& g = poly.generators[static_cast<size_t>(k)];
    (g.sign > 0 ? sol.u : sol.v)[static_cast<size_t>(g.pattern)] += c(k) * g.direction;
  }
  sol.skip = poly.skip_for(c);
  sol.fit = poly.generator_matrix() * c;
  if (poly.has_skip) sol.fit += poly.design * sol.skip;
  sol.objective = poly.value_of(c);
  return sol;
}

namespace {

Analysis run_pipeline(const Dataset& data, PatternBasis basis, const SolverOptions& opts) {
  Analysis a;
  a.basis = std::move(basis);
  a.report = solve(data, a.basis, opts);
  a.certificate = extract_dual(data, a.basis, a.report);
  a.polytope = build_polytope(data, a.basis, a.certificate);
  return a;
}

}  // namespace

Analysis analyze(const Dataset& data, const AnalysisOptions& opts) {
  data.validate();
  return run_pipeline(data, enumerate_patterns(data.design(), opts.arrangement), opts.solver);
}

Analysis analyze_subsampled(const Dataset& data, const PatternBasis& basis, const std::vector<int>& subset,
                            const SolverOptions& opts) {
  if (subset.empty()) throw Error(ErrorCode::EmptySubset, "pattern subset is empty");
  PatternBasis sub;
  for (int i : subset) {
    if (i < 0 || static_cast<size_t>(i) >= basis.size())
      throw Error(ErrorCode::InvalidInput, "pattern index " + std::to_string(i) + " out of range");
    sub.push_back(basis[static_cast<size_t>(i)]);
  }
  return run_pipeline(data, std::move(sub), opts);
}

}  // namespace cvxrelu
