#include "cvxrelu/convex_core.hpp"

#include <algorithm>
#include <cmath>

#include "cvxrelu/linalg.hpp"
#include "cvxrelu/nnls.hpp"

namespace cvxrelu {

std::vector<ConeHandle> make_cones(const Mat& design, const PatternBasis& basis) {
  std::vector<ConeHandle> cones;
  cones.reserve(basis.size());
  for (const auto& p : basis) {
    if (p.mask.size() != static_cast<size_t>(design.rows()))
      throw Error(ErrorCode::ShapeMismatch, "pattern length differs from sample count");
    cones.emplace_back(design, p);
  }
  return cones;
}

namespace {

Vec masked(const ActivationPattern& p, const Vec& z) {
  Vec out = z;
  for (Eigen::Index j = 0; j < z.size(); ++j)
    if (!p.mask[static_cast<size_t>(j)]) out(j) = 0.0;
  return out;
}

void check_shapes(const Dataset& data, const PatternBasis& basis, const ConvexSolution& sol) {
  const size_t P = basis.size();
  if (sol.u.size() != P || sol.v.size() != P)
    throw Error(ErrorCode::ShapeMismatch, "solution block count differs from pattern count");
  for (size_t i = 0; i < P; ++i) {
    if (sol.u[i].size() != data.dim() || sol.v[i].size() != data.dim())
      throw Error(ErrorCode::ShapeMismatch, "solution block width differs from design width");
    if (basis[i].mask.size() != static_cast<size_t>(data.n()))
      throw Error(ErrorCode::ShapeMismatch, "pattern length differs from sample count");
  }
  if (data.has_skip && sol.skip.size() != data.dim())
    throw Error(ErrorCode::ShapeMismatch, "skip block missing or of wrong width");
}

}  // namespace

Vec convex_fit(const Dataset& data, const PatternBasis& basis, const ConvexSolution& sol) {
  check_shapes(data, basis, sol);
  const Mat X = data.design();
  Vec fit = Vec::Zero(data.n());
  for (size_t i = 0; i < basis.size(); ++i) fit += masked(basis[i], X * (sol.u[i] - sol.v[i]));
  if (data.has_skip) fit += X * sol.skip;
  return fit;
}

double objective(const Dataset& data, const PatternBasis& basis, const ConvexSolution& sol) {
  check_shapes(data, basis, sol);
  double reg = 0.0;
  for (size_t i = 0; i < basis.size(); ++i) reg += sol.u[i].norm() + sol.v[i].norm();
  if (data.mode == Mode::Interpolation) return reg;
  const Vec r = convex_fit(data, basis, sol) - data.y;
  return 0.5 * r.squaredNorm() + data.beta * reg;
}

DualValue evaluate_dual(const Dataset& data, const std::vector<ConeHandle>& cones, const Vec& nu_in) {
  const Mat X = data.design();
  Vec nu = nu_in;
  if (data.has_skip) nu = complement_projector(X, data.n()) * nu;
  double ratio = 0.0;
  for (const auto& c : cones) {
    const Vec a = X.transpose() * masked(c.pattern, nu);
    if (a.squaredNorm() == 0.0) continue;
    ratio = std::max(ratio, project_onto_cone(c, -a).norm());
    ratio = std::max(ratio, project_onto_cone(c, a).norm());
  }
  ratio /= data.weight();
  DualValue out;
  out.max_ratio = ratio;
  if (data.mode == Mode::Regression) {
    out.nu = ratio > 1.0 ? Vec(nu / ratio) : nu;
    out.value = -0.5 * out.nu.squaredNorm() - out.nu.dot(data.y);
  } else {
    out.nu = ratio > 0.0 ? Vec(nu / ratio) : Vec(Vec::Zero(nu.size()));
    out.value = -out.nu.dot(data.y);
  }
  return out;
}

namespace {

struct Block {
  int pattern;  // -1 for the skip block
  double sign;
  Mat columns;  // sign * D_i X
};

// Newton refinement of the optimality conditions on the blocks that carry mass. Unknowns are nu, one
// magnitude per active block and the skip weights; the equations say the fit matches (y + nu, or y when
// interpolating), every active block sits exactly on the dual boundary, and nu is orthogonal to the skip
// range. ADMM leaves the block directions about 1e-8 rad off; this removes that. Returns false and leaves
// p untouched when the refinement does not land on a clean, dual-feasible point.
bool refine_kkt(const Dataset& data, const Mat& X, const std::vector<ConeHandle>& cones,
                const std::vector<Block>& blocks, int d, Vec& p, Vec& nu) {
  const int n = data.n();
  const int K = static_cast<int>(blocks.size());
  const bool interp = data.mode == Mode::Interpolation;
  const double weight = data.weight();
  double pmax = 0.0;
  for (int k = 0; k < K; ++k)
    if (blocks[static_cast<size_t>(k)].pattern >= 0) pmax = std::max(pmax, p.segment(k * d, d).norm());
  if (pmax == 0.0) return false;
  std::vector<int> act;
  for (int k = 0; k < K; ++k)
    if (blocks[static_cast<size_t>(k)].pattern >= 0 && p.segment(k * d, d).norm() > 1e-6 * pmax) act.push_back(k);
  const int A = static_cast<int>(act.size());
  const int S = data.has_skip ? d : 0;
  const int V = n + A + S;
  const int E = n + A + S;

  Vec z(V);
  z.head(n) = nu;
  for (int a = 0; a < A; ++a) z(n + a) = p.segment(act[static_cast<size_t>(a)] * d, d).norm();
  if (S) z.tail(S) = p.segment((K - 1) * d, d);

  auto direction = [&](int k, const Vec& v, double& norm) {
    const Block& b = blocks[static_cast<size_t>(k)];
    const Vec q = project_onto_cone(cones[static_cast<size_t>(b.pattern)], -(b.columns.transpose() * v));
    norm = q.norm();
    return norm > 0.0 ? Vec(q / norm) : Vec(Vec::Zero(d));
  };
  auto residual = [&](const Vec& zz) {
    const Vec v = zz.head(n);
    Vec F(E);
    Vec fit = Vec::Zero(n);
    for (int a = 0; a < A; ++a) {
      const int k = act[static_cast<size_t>(a)];
      double nq;
      const Vec dir = direction(k, v, nq);
      fit += zz(n + a) * (blocks[static_cast<size_t>(k)].columns * dir);
      F(n + a) = (nq - weight) / weight;
    }
    if (S) {
      fit += X * zz.tail(S);
      F.tail(S) = X.transpose() * v;
    }
    F.head(n) = fit - (interp ? data.y : Vec(data.y + v));
    return F;
  };

  const double tol = 1e-14 * std::max(1.0, data.y.lpNorm<Eigen::Infinity>());
  Vec F = residual(z);
  double fn = F.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < 40 && fn > tol; ++it) {
    Mat J(E, V);
    for (int j = 0; j < V; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(z(j)));
      Vec zp = z, zm = z;
      zp(j) += h;
      zm(j) -= h;
      J.col(j) = (residual(zp) - residual(zm)) / (2 * h);
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(J);
    cod.setThreshold(1e-12);
    const Vec step = cod.solve(-F);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 20; ++ls, t *= 0.5) {
      Vec zn = z + t * step;
      for (int a = 0; a < A; ++a) zn(n + a) = std::max(zn(n + a), 0.0);
      const Vec Fn = residual(zn);
      const double nn = Fn.lpNorm<Eigen::Infinity>();
      if (nn < fn) {
        z = zn;
        F = Fn;
        fn = nn;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (fn > 1e-12 * std::max(1.0, data.y.lpNorm<Eigen::Infinity>())) return false;
  const Vec v = z.head(n);
  const DualValue dv = evaluate_dual(data, cones, v);
  if (dv.max_ratio > 1.0 + 1e-9) return false;

  Vec q = Vec::Zero(p.size());
  for (int a = 0; a < A; ++a) {
    const int k = act[static_cast<size_t>(a)];
    double nq;
    q.segment(k * d, d) = z(n + a) * direction(k, v, nq);
  }
  if (S) q.segment((K - 1) * d, d) = z.tail(S);
  p = q;
  nu = v;
  return true;
}

}  // namespace

SolveReport solve(const Dataset& data, const PatternBasis& basis, const SolverOptions& opts) {
  data.validate();
  const Mat X = data.design();
  const int n = data.n();
  const int d = data.dim();
  const std::vector<ConeHandle> cones = make_cones(X, basis);
  const double weight = data.weight();
  const bool interp = data.mode == Mode::Interpolation;

  std::vector<Block> blocks;
  for (size_t i = 0; i < basis.size(); ++i) {
    if (std::none_of(basis[i].mask.begin(), basis[i].mask.end(), [](auto b) { return b != 0; }))
      continue;  // the all-off pattern never contributes to the fit
    Mat A = cones[i].masked_design(X);
    blocks.push_back({static_cast<int>(i), 1.0, A});
    blocks.push_back({static_cast<int>(i), -1.0, -A});
  }
  if (data.has_skip) blocks.push_back({-1, 1.0, X});
  const int K = static_cast<int>(blocks.size());
  const int N = K * d;

  Mat M(n, N);
  for (int k = 0; k < K; ++k) M.middleCols(k * d, d) = blocks[static_cast<size_t>(k)].columns;

  SolveReport rep;
  ConvexSolution& sol = rep.solution;
  auto unpack = [&](const Vec& p) {
    sol.u.assign(basis.size(), Vec::Zero(d));
    sol.v.assign(basis.size(), Vec::Zero(d));
    sol.skip = data.has_skip ? Vec(Vec::Zero(d)) : Vec();
    for (int k = 0; k < K; ++k) {
      const Block& b = blocks[static_cast<size_t>(k)];
      const Vec part = p.segment(k * d, d);
      if (b.pattern < 0)
        sol.skip = part;
      else if (b.sign > 0)
        sol.u[static_cast<size_t>(b.pattern)] = part;
      else
        sol.v[static_cast<size_t>(b.pattern)] = part;
    }
    sol.fit = M * p;
  };

  // Linear feasibility of the equality block.
  const Mat MMt = M * M.transpose();
  Eigen::JacobiSVD<Mat> svd(MMt, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat pinv = Mat::Zero(n, n);
  {
    const Vec& s = svd.singularValues();
    const double top = s.size() ? s(0) : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > 1e-12 * top) pinv += svd.matrixV().col(i) * svd.matrixU().col(i).transpose() / s(i);
  }
  if (interp) {
    const Vec proj = MMt * (pinv * data.y);
    if ((proj - data.y).norm() > 1e-8 * std::max(1.0, data.y.norm()))
      throw Error(ErrorCode::Infeasible, "labels are not reachable by any interpolating network");
  }

  if (data.y.squaredNorm() == 0.0) {
    unpack(Vec::Zero(N));
    sol.objective = 0.0;
    rep.multiplier = Vec::Zero(n);
    return rep;
  }

  double rho = opts.rho0;
  Eigen::LLT<Mat> llt;
  auto factor = [&]() { llt.compute(rho * Mat::Identity(n, n) + MMt); };
  if (!interp) factor();
  const Vec Mty = M.transpose() * data.y;

  Vec w = Vec::Zero(N), p = Vec::Zero(N), lam = Vec::Zero(N), p_prev(N);
  auto prox = [&](const Vec& z, Vec& out) {
    for (int k = 0; k < K; ++k) {
      const Block& b = blocks[static_cast<size_t>(k)];
      const Vec zk = z.segment(k * d, d);
      if (b.pattern < 0) {
        out.segment(k * d, d) = zk;
        continue;
      }
      const ConeHandle& cone = cones[static_cast<size_t>(b.pattern)];
      const Vec q = project_onto_cone(cone, zk);
      const double nq = q.norm();
      const double thr = weight / rho;
      out.segment(k * d, d) = nq > thr ? Vec((1.0 - thr / nq) * q) : Vec(Vec::Zero(d));
    }
  };

  auto dual_candidate = [&]() -> Vec {
    if (!interp) return M * p - data.y;
    return -rho * (pinv * (M * lam));
  };

  auto primal_value = [&]() {
    double reg = 0.0;
    for (int k = 0; k < K; ++k)
      if (blocks[static_cast<size_t>(k)].pattern >= 0) reg += p.segment(k * d, d).norm();
    if (interp) return reg;
    return 0.5 * (M * p - data.y).squaredNorm() + weight * reg;
  };

  const double yscale = std::max(1.0, data.y.norm());
  int it = 0;
  double r_prim = 0.0, r_dual = 0.0, gap = INFINITY;
  bool done = false;
  for (it = 1; it <= opts.max_iter; ++it) {
    const Vec v = p - lam;
    if (interp) {
      w = v - M.transpose() * (pinv * (M * v - data.y));
    } else {
      const Vec r = Mty + rho * v;
      w = (r - M.transpose() * llt.solve(M * r)) / rho;
    }
    p_prev = p;
    prox(w + lam, p);
    lam += w - p;

    if (it % opts.check_every != 0) continue;
    r_prim = (w - p).norm();
    r_dual = rho * (p - p_prev).norm();
    const double eps = opts.tol_residual * std::max(yscale, p.norm());
    if (r_prim <= eps && r_dual <= eps) {
      const DualValue dv = evaluate_dual(data, cones, dual_candidate());
      const double pv = primal_value();
      gap = pv - dv.value;
      if (std::abs(gap) <= opts.target_gap * std::max(1.0, std::abs(pv))) {
        done = true;
        break;
      }
    }
    if (opts.adaptive_rho && it % 50 == 0 && it < opts.max_iter / 2) {
      double scale = 1.0;
      if (r_prim > 10.0 * r_dual)
        scale = 2.0;
      else if (r_dual > 10.0 * r_prim)
        scale = 0.5;
      if (scale != 1.0) {
        rho *= scale;
        lam /= scale;
        if (!interp) factor();
      }
    }
  }
  if (!done) {
    const DualValue dv = evaluate_dual(data, cones, dual_candidate());
    gap = primal_value() - dv.value;
    if (!(std::abs(gap) <= opts.tol_gap))
      throw Error(ErrorCode::NoConvergence, "splitting solver stopped with duality gap " + std::to_string(gap));
    it = opts.max_iter;
  }

  rep.multiplier = dual_candidate();

  if (interp) {
    // Polish: keep the recovered block directions and refit magnitudes exactly.
    std::vector<int> act;
    double pmax = 0.0;
    for (int k = 0; k < K; ++k)
      if (blocks[static_cast<size_t>(k)].pattern >= 0) pmax = std::max(pmax, p.segment(k * d, d).norm());
    for (int k = 0; k < K; ++k)
      if (blocks[static_cast<size_t>(k)].pattern >= 0 && p.segment(k * d, d).norm() > 1e-9 * pmax) act.push_back(k);
    Mat G(n, static_cast<Eigen::Index>(act.size()));
    for (size_t a = 0; a < act.size(); ++a) {
      const int k = act[a];
      const Vec dir = p.segment(k * d, d).normalized();
      G.col(static_cast<Eigen::Index>(a)) = blocks[static_cast<size_t>(k)].columns * dir;
    }
    Mat Pc = data.has_skip ? complement_projector(X, n) : Mat::Identity(n, n);
    if (!act.empty()) {
      NnlsResult c = nnls(Pc * G, Pc * data.y, 100 * static_cast<int>(act.size() + n));
      Vec q = Vec::Zero(N);
      for (size_t a = 0; a < act.size(); ++a) {
        const int k = act[a];
        q.segment(k * d, d) = c.x(static_cast<Eigen::Index>(a)) * p.segment(k * d, d).normalized();
      }
      if (data.has_skip) q.segment((K - 1) * d, d) = least_squares(X, data.y - G * c.x);
      const double old_res = (M * p - data.y).norm();
      const double new_res = (M * q - data.y).norm();
      if (new_res <= std::max(old_res, 1e-12 * yscale)) p = q;
    }
  }

  {
    Vec nu = evaluate_dual(data, cones, rep.multiplier).nu;
    Vec q = p;
    if (refine_kkt(data, X, cones, blocks, d, q, nu)) {
      const double before = primal_value();
      std::swap(p, q);
      if (primal_value() <= before + 1e-9 * std::max(1.0, std::abs(before)))
        rep.multiplier = interp ? nu : Vec(M * p - data.y);
      else
        std::swap(p, q);
    }
  }

  unpack(p);
  rep.primal_value = primal_value();
  sol.objective = rep.primal_value;
  const DualValue dv = evaluate_dual(data, cones, rep.multiplier);
  rep.dual_value = dv.value;
  rep.gap = rep.primal_value - dv.value;
  rep.primal_residual = r_prim;
  rep.dual_residual = r_dual;
  rep.fit_residual = interp ? (sol.fit - data.y).norm() : 0.0;
  rep.iterations = it;
  rep.rho = rho;
  return rep;
}

}  // namespace cvxrelu
