#include "cvxrelu/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cvxrelu/linalg.hpp"
#include "cvxrelu/nnls.hpp"

namespace cvxrelu {

Dataset regression_view(const Dataset& data, double beta) {
  Dataset out = data;
  out.mode = Mode::Regression;
  out.beta = beta > 0.0 ? beta : data.beta;
  return out;
}

NetworkParams random_network(const Dataset& data, int m, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-scale, scale);
  const int d = data.dim();
  NetworkParams p;
  p.neurons.resize(static_cast<size_t>(m));
  for (auto& nr : p.neurons) {
    nr.w.resize(d);
    for (int k = 0; k < d; ++k) nr.w(k) = unif(rng);
    nr.alpha = unif(rng);
  }
  if (data.has_skip) {
    p.skip.resize(d);
    for (int k = 0; k < d; ++k) p.skip(k) = unif(rng);
  }
  return p;
}

GDTrace gradient_descent(const Dataset& data_in, const NetworkParams& init, const GDConfig& cfg) {
  const Dataset data = regression_view(data_in, cfg.beta);
  data.validate();
  if (cfg.lr < 0.0 || cfg.steps < 0) throw Error(ErrorCode::InvalidInput, "learning rate and step count must be nonnegative");
  const Mat X = data.design();
  const double beta = data.beta;
  GDTrace tr;
  tr.params = init;
  auto value = [&](const NetworkParams& p) { return network_objective(data, p); };
  const double initial = value(init);
  tr.objective.emplace_back(0, initial);
  const int m = init.width();
  Mat pre(X.rows(), m);
  for (int step = 1; step <= cfg.steps; ++step) {
    NetworkParams& p = tr.params;
    Vec f = Vec::Zero(X.rows());
    for (int j = 0; j < m; ++j) {
      pre.col(j) = X * p.neurons[static_cast<size_t>(j)].w;
      f += pre.col(j).cwiseMax(0.0) * p.neurons[static_cast<size_t>(j)].alpha;
    }
    if (p.skip.size()) f += X * p.skip;
    const Vec r = f - data.y;
    for (int j = 0; j < m; ++j) {
      Neuron& nr = p.neurons[static_cast<size_t>(j)];
      const Vec act = pre.col(j).cwiseMax(0.0);
      const Vec gate = (pre.col(j).array() > 0.0).cast<double>().matrix();
      const double ga = act.dot(r) + beta * nr.alpha;
      const Vec gw = X.transpose() * gate.cwiseProduct(r) * nr.alpha + beta * nr.w;
      nr.alpha -= cfg.lr * ga;
      nr.w -= cfg.lr * gw;
    }
    if (p.skip.size()) p.skip -= cfg.lr * (X.transpose() * r);
    if (cfg.record_every > 0 && (step % cfg.record_every == 0 || step == cfg.steps)) {
      const double v = value(p);
      if (!std::isfinite(v) || v > 1e6 * std::max(initial, 1e-300))
        throw Error(ErrorCode::Diverged, "gradient descent diverged at step " + std::to_string(step));
      tr.objective.emplace_back(step, v);
    }
  }
  tr.final_objective = value(tr.params);
  if (!std::isfinite(tr.final_objective) || tr.final_objective > 1e6 * std::max(initial, 1e-300))
    throw Error(ErrorCode::Diverged, "gradient descent diverged");
  return tr;
}

GDTrace train_nonconvex_gd(const Dataset& data, const GDConfig& cfg) {
  if (cfg.m < 1) throw Error(ErrorCode::InvalidInput, "width must be positive");
  return gradient_descent(data, random_network(data, cfg.m, cfg.seed, cfg.init_scale), cfg);
}

SliceKind parse_slice(const std::string& s) {
  if (s == "M1") return SliceKind::M1;
  if (s == "M2") return SliceKind::M2;
  if (s == "M3") return SliceKind::M3;
  throw Error(ErrorCode::InvalidInput, "unknown slice '" + s + "'");
}

const char* slice_name(SliceKind k) {
  switch (k) {
    case SliceKind::M1: return "M1";
    case SliceKind::M2: return "M2";
    case SliceKind::M3: return "M3";
  }
  return "?";
}

double toy_loss(const Mat& U, const Vec& v, double beta) {
  const double r3 = std::sqrt(3.0);
  Mat X(2, 2);
  X << -r3, 1.0, r3, 1.0;
  const Vec out = (X * U).cwiseMax(0.0) * v;
  return 0.5 * (out - Vec::Ones(2)).squaredNorm() + 0.5 * beta * (U.squaredNorm() + v.squaredNorm());
}

namespace {

struct SliceSpec {
  double t0, t1, s0, s1;
  int nt, ns;
};

SliceSpec default_spec(SliceKind k) {
  switch (k) {
    case SliceKind::M1: return {-1.0, 1.0, -0.5, 2.0, 121, 121};
    case SliceKind::M2: return {-0.5, 0.3, -0.25, 0.6, 161, 171};
    case SliceKind::M3: return {-0.5, 1.0, -0.5, 1.0, 121, 121};
  }
  return {};
}

}  // namespace

SliceGrid landscape_slice(SliceKind kind, double beta, const SliceOptions& opts) {
  if (!(beta > 0.0 && beta < 2.0)) throw Error(ErrorCode::InvalidInput, "slice beta must lie in (0, 2)");
  SliceSpec sp = default_spec(kind);
  if (opts.t_range.first != opts.t_range.second) std::tie(sp.t0, sp.t1) = opts.t_range;
  if (opts.s_range.first != opts.s_range.second) std::tie(sp.s0, sp.s1) = opts.s_range;
  if (opts.nt > 1) sp.nt = opts.nt;
  if (opts.ns > 1) sp.ns = opts.ns;
  const double r = std::sqrt(1.0 - 0.5 * beta);
  const double q = r / (2.0 * std::sqrt(2.0));
  const double r3 = std::sqrt(3.0);

  SliceGrid g;
  g.kind = kind;
  g.beta = beta;
  g.optimal_value = beta - beta * beta / 4.0;
  g.t = Vec::LinSpaced(sp.nt, sp.t0, sp.t1);
  g.s = Vec::LinSpaced(sp.ns, sp.s0, sp.s1);
  g.values.resize(sp.nt, sp.ns);

  Mat U0, U1, U2;
  Vec v0, v1, v2;
  if (kind == SliceKind::M2) {
    U0 = Mat::Zero(2, 2);
    U0(1, 0) = r;
    U1.resize(2, 2);
    U1 << r3 * q, -r3 * q, q, q;
    U2 = Mat::Zero(2, 2);
    U2(1, 1) = r;
    v0 = Vec::Zero(2);
    v0(0) = r;
    v1 = Vec::Constant(2, r / std::sqrt(2.0));
    v2 = Vec::Zero(2);
    v2(1) = r;
  } else if (kind == SliceKind::M3) {
    U0 = Mat::Zero(2, 3);
    U0(1, 0) = r;
    U1 = Mat::Zero(2, 3);
    U1(0, 1) = r3 * q;
    U1(1, 1) = q;
    U1(0, 2) = -r3 * q;
    U1(1, 2) = q;
    U2 = Mat::Zero(2, 3);
    U2(1, 1) = r;
    v0 = Vec::Zero(3);
    v0(0) = r;
    v1 = Vec::Zero(3);
    v1(1) = v1(2) = r / std::sqrt(2.0);
    v2 = Vec::Zero(3);
    v2(1) = r;
  }
  for (int i = 0; i < sp.nt; ++i) {
    for (int j = 0; j < sp.ns; ++j) {
      const double t = g.t(i), s = g.s(j);
      double val = 0.0;
      if (kind == SliceKind::M1) {
        Mat U(2, 1);
        U << t, s;
        val = toy_loss(U, Vec::Constant(1, r), beta);
      } else if (kind == SliceKind::M2) {
        const Mat U = std::cos(t) * U0 + 2.0 * s * (U1 - U0) + std::sin(t) * U2;
        const Vec v = std::cos(t) * v0 + 2.0 * s * (v1 - v0) + std::sin(t) * v2;
        val = toy_loss(U, v, beta);
      } else {
        const Mat U = std::cos(t) * std::cos(s) * U0 + std::cos(t) * std::sin(s) * U1 + std::sin(t) * U2;
        const Vec v = std::cos(t) * std::cos(s) * v0 + std::cos(t) * std::sin(s) * v1 + std::sin(t) * v2;
        val = toy_loss(U, v, beta);
      }
      g.values(i, j) = val;
    }
  }

  auto add_line = [&](double ta, double sa, double tb, double sb) {
    for (int k = 0; k <= 4; ++k) {
      const double a = k / 4.0;
      g.optima.emplace_back(ta + a * (tb - ta), sa + a * (sb - sa));
    }
  };
  if (kind == SliceKind::M1) {
    g.optima.emplace_back(0.0, r);
  } else if (kind == SliceKind::M2) {
    g.optima.emplace_back(0.0, 0.5);
    add_line(0.0, 0.0, std::min(sp.t1, M_PI / 2.0), 0.0);
  } else {
    add_line(0.0, 0.0, std::min(sp.t1, M_PI / 2.0), 0.0);
    add_line(0.0, 0.0, 0.0, std::min(sp.s1, M_PI / 2.0));
  }
  return g;
}

SliceCheck check_slice(const SliceGrid& g) {
  SliceCheck out;
  const Eigen::Index nt = g.values.rows(), ns = g.values.cols();
  const double ht = (g.t(nt - 1) - g.t(0)) / static_cast<double>(nt - 1);
  const double hs = (g.s(ns - 1) - g.s(0)) / static_cast<double>(ns - 1);
  auto local_min = [&](Eigen::Index i, Eigen::Index j) {
    const double v = g.values(i, j);
    const double tol = 1e-12 * std::max(1.0, std::abs(v));
    for (Eigen::Index di = -1; di <= 1; ++di)
      for (Eigen::Index dj = -1; dj <= 1; ++dj) {
        const Eigen::Index a = i + di, b = j + dj;
        if ((di || dj) && a >= 0 && b >= 0 && a < nt && b < ns && g.values(a, b) < v - tol) return false;
      }
    return true;
  };
  Eigen::Index bi = 0, bj = 0;
  out.grid_min = g.values.minCoeff(&bi, &bj);
  for (const auto& [pt, ps] : g.optima) {
    double best = INFINITY;
    for (Eigen::Index i = 0; i < nt; ++i)
      for (Eigen::Index j = 0; j < ns; ++j) {
        const double dist = std::max(std::abs(g.t(i) - pt) / ht, std::abs(g.s(j) - ps) / hs);
        if (dist <= 1.0 + 1e-9 && local_min(i, j)) best = std::min(best, dist);
      }
    out.worst_gap = std::max(out.worst_gap, best);
    if (!std::isfinite(best) && out.reason.empty())
      out.reason = "no grid local minimum within one cell of (" + std::to_string(pt) + ", " + std::to_string(ps) + ")";
  }
  bool near = false;
  for (const auto& [pt, ps] : g.optima) {
    if (std::abs(g.t(bi) - pt) <= ht * (1.0 + 1e-9) && std::abs(g.s(bj) - ps) <= hs * (1.0 + 1e-9)) near = true;
  }
  if (g.optima.size() > 1) {
    // Segments of optima: the grid minimum may sit between sampled points; test distance to the segments.
    for (size_t a = 0; a + 1 < g.optima.size() && !near; ++a) {
      const auto [t0, s0] = g.optima[a];
      const auto [t1, s1] = g.optima[a + 1];
      for (int k = 0; k <= 100 && !near; ++k) {
        const double w = k / 100.0;
        const double pt = t0 + w * (t1 - t0), ps = s0 + w * (s1 - s0);
        if (std::abs(g.t(bi) - pt) <= ht * (1.0 + 1e-9) && std::abs(g.s(bj) - ps) <= hs * (1.0 + 1e-9)) near = true;
      }
    }
  }
  if (!near && out.reason.empty()) out.reason = "grid minimum is not within one cell of an analytic optimum";
  out.pass = out.reason.empty();
  return out;
}

NetworkParams snap_to_optimal(const OptimalPolytope& poly, const NetworkParams& params) {
  const int K = poly.size();
  const int d = static_cast<int>(poly.design.cols());
  // Assign neurons to active generators through their pattern and sign.
  std::vector<int> gen(params.neurons.size(), -1);
  Vec mass = Vec::Zero(K);
  for (size_t j = 0; j < params.neurons.size(); ++j) {
    const Neuron& nr = params.neurons[j];
    if (nr.is_zero()) continue;
    const std::vector<std::uint8_t> m = closed_mask(poly.design, nr.w);
    int pat = -1;
    for (size_t i = 0; i < poly.basis.size(); ++i)
      if (poly.basis[i].mask == m) pat = static_cast<int>(i);
    if (pat < 0) continue;
    for (int k = 0; k < K; ++k) {
      const Generator& g = poly.generators[static_cast<size_t>(k)];
      if (g.pattern == pat && g.sign == (nr.alpha > 0 ? 1 : -1)) gen[j] = k;
    }
    if (gen[j] >= 0) mass(gen[j]) += nr.w.norm() * std::abs(nr.alpha);
  }
  std::vector<int> S;
  for (int k = 0; k < K; ++k)
    if (mass(k) > 0.0) S.push_back(k);
  if (S.empty()) throw Error(ErrorCode::NotNearOptimal, "no neuron points along an optimal direction");
  const Mat G = poly.reduced_generators();
  Mat Gs(G.rows(), static_cast<Eigen::Index>(S.size()));
  Vec cs(static_cast<Eigen::Index>(S.size()));
  for (size_t a = 0; a < S.size(); ++a) {
    Gs.col(static_cast<Eigen::Index>(a)) = G.col(S[a]);
    cs(static_cast<Eigen::Index>(a)) = mass(S[a]);
  }
  const Vec target = poly.reduced_target();
  // Closest point of {c >= 0, Gs c = target}: c = c0 + N z, then a least-distance problem in z.
  const Vec c0 = least_squares(Gs, target);
  if ((Gs * c0 - target).norm() > 1e-9 * std::max(1.0, target.norm()))
    throw Error(ErrorCode::NotNearOptimal, "used directions cannot reproduce the optimal fit");
  const Mat N = null_space(Gs);
  Vec c = c0;
  if (N.cols() > 0) {
    const Vec zstar = N.transpose() * (cs - c0);
    const LdpResult lr = ldp(N, -c0 - N * zstar, 1000);
    if (!lr.feasible) throw Error(ErrorCode::NotNearOptimal, "optimal face is unreachable from the descent point");
    c = c0 + N * (zstar + lr.h);
  }
  for (Eigen::Index a = 0; a < c.size(); ++a) {
    if (c(a) < -1e-9 * std::max(1.0, c.lpNorm<Eigen::Infinity>()))
      throw Error(ErrorCode::NotNearOptimal, "optimal face is unreachable from the descent point");
    c(a) = std::max(c(a), 0.0);
  }
  Vec full = Vec::Zero(K);
  for (size_t a = 0; a < S.size(); ++a) full(S[a]) = c(static_cast<Eigen::Index>(a));

  NetworkParams out = params;
  for (size_t j = 0; j < params.neurons.size(); ++j) {
    const Neuron& nr = params.neurons[j];
    if (gen[j] < 0 || nr.is_zero()) {
      out.neurons[j] = Neuron{Vec::Zero(d), 0.0};
      continue;
    }
    const int k = gen[j];
    const double share = nr.w.norm() * std::abs(nr.alpha) / mass(k) * full(k);
    const Generator& g = poly.generators[static_cast<size_t>(k)];
    const double rt = std::sqrt(share);
    out.neurons[j] = share > 0.0 ? Neuron{rt * g.direction, g.sign * rt} : Neuron{Vec::Zero(d), 0.0};
  }
  if (poly.has_skip) out.skip = poly.skip_for(full);
  return out;
}

DemoResult nonincreasing_demo(const Dataset& data_in, const NetworkParams& start, const NetworkParams& target,
                              const GDConfig& cfg) {
  if (data_in.mode == Mode::Interpolation && !(cfg.beta > 0.0))
    throw Error(ErrorCode::InvalidInput, "interpolation data needs an explicit beta for descent");
  const Dataset data = regression_view(data_in, cfg.beta);
  data.validate();
  const int m = start.width();
  if (m < data.n() + 1)
    throw Error(ErrorCode::PreconditionViolated, "demo needs width at least n + 1 = " + std::to_string(data.n() + 1));
  if (target.width() != m) throw Error(ErrorCode::InvalidInput, "target width differs from start width");
  const Analysis an = analyze(data);
  const OptimalPolytope& poly = an.polytope;
  const double opt = poly.optimal_value;

  DemoResult out;
  std::vector<NetworkParams> descent{start};
  NetworkParams cur = start;
  GDConfig step_cfg = cfg;
  step_cfg.beta = data.beta;
  step_cfg.record_every = 0;
  const int chunk = std::max(1, cfg.record_every);
  int done = 0;
  while (done < cfg.steps) {
    step_cfg.steps = std::min(chunk, cfg.steps - done);
    cur = gradient_descent(data, cur, step_cfg).params;
    done += step_cfg.steps;
    descent.push_back(cur);
    if (network_objective(data, cur) - opt <= 1e-10 * std::max(1.0, std::abs(opt))) break;
  }
  const double reached = network_objective(data, cur);
  if (reached - opt > 10.0 * TOL_PATH * std::max(1.0, std::abs(opt)))
    throw Error(ErrorCode::NotNearOptimal, "descent stopped " + std::to_string(reached - opt) + " above the optimum");

  const NetworkParams snapped = snap_to_optimal(poly, cur);
  const ConnectResult cr = connect(poly, snapped, target, Strategy::Auto);

  std::vector<NetworkParams> all = descent;
  const int bridge = 16;
  for (int k = 1; k <= bridge; ++k) {
    const double a = static_cast<double>(k) / bridge;
    NetworkParams q = cur;
    for (size_t j = 0; j < q.neurons.size(); ++j) {
      q.neurons[j].w = (1.0 - a) * cur.neurons[j].w + a * snapped.neurons[j].w;
      q.neurons[j].alpha = (1.0 - a) * cur.neurons[j].alpha + a * snapped.neurons[j].alpha;
    }
    if (q.skip.size()) q.skip = (1.0 - a) * cur.skip + a * snapped.skip;
    all.push_back(q);
  }
  const size_t descent_end = descent.size() - 1;
  const size_t snap_end = all.size() - 1;
  for (size_t k = 1; k < cr.path.samples.size(); ++k) all.push_back(cr.path.samples[k].params);

  const double denom = static_cast<double>(all.size() - 1);
  for (size_t k = 0; k < all.size(); ++k) {
    out.path.samples.push_back({k + 1 == all.size() ? 1.0 : static_cast<double>(k) / denom, all[k]});
    out.objectives.push_back(network_objective(data, all[k]));
  }
  out.path.events.push_back({EventKind::Descent, 0.0, 0});
  out.path.events.push_back({EventKind::Linear, static_cast<double>(descent_end) / denom, static_cast<int>(descent_end)});
  for (const auto& e : cr.path.events) {
    const int idx = static_cast<int>(snap_end) + e.sample;
    out.path.events.push_back({e.kind, static_cast<double>(idx) / denom, idx});
  }
  for (size_t k = 1; k < out.objectives.size(); ++k)
    out.max_increase = std::max(out.max_increase, out.objectives[k] - out.objectives[k - 1]);
  out.nonincreasing = out.max_increase <= TOL_PATH;
  return out;
}

}  // namespace cvxrelu
