#include "cvxrelu/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cvxrelu/linalg.hpp"

namespace cvxrelu {

int NetworkParams::cardinality() const {
  int c = 0;
  for (const auto& nr : neurons) c += nr.is_zero() ? 0 : 1;
  return c;
}

Vec NetworkParams::flatten() const {
  Eigen::Index len = skip.size();
  for (const auto& nr : neurons) len += nr.w.size() + 1;
  Vec out(len);
  Eigen::Index pos = 0;
  for (const auto& nr : neurons) {
    out.segment(pos, nr.w.size()) = nr.w;
    pos += nr.w.size();
    out(pos++) = nr.alpha;
  }
  out.tail(skip.size()) = skip;
  return out;
}

bool NetworkParams::operator==(const NetworkParams& o) const {
  if (neurons.size() != o.neurons.size() || skip.size() != o.skip.size()) return false;
  if (skip.size() && skip != o.skip) return false;
  for (size_t j = 0; j < neurons.size(); ++j)
    if (neurons[j].alpha != o.neurons[j].alpha || neurons[j].w != o.neurons[j].w) return false;
  return true;
}

Vec network_output(const Mat& design, const NetworkParams& params) {
  Vec f = Vec::Zero(design.rows());
  for (const auto& nr : params.neurons) {
    if (nr.w.size() != design.cols()) throw Error(ErrorCode::ShapeMismatch, "neuron width differs from design width");
    f += (design * nr.w).cwiseMax(0.0) * nr.alpha;
  }
  if (params.skip.size()) {
    if (params.skip.size() != design.cols()) throw Error(ErrorCode::ShapeMismatch, "skip width differs from design width");
    f += design * params.skip;
  }
  return f;
}

namespace {

double decay(const NetworkParams& params) {
  double s = 0.0;
  for (const auto& nr : params.neurons) s += nr.w.squaredNorm() + nr.alpha * nr.alpha;
  return 0.5 * s;
}

double objective_on(Mode mode, double weight, const Mat& X, const Vec& y, const NetworkParams& params) {
  if (mode == Mode::Interpolation) return decay(params);
  return 0.5 * (network_output(X, params) - y).squaredNorm() + weight * decay(params);
}

}  // namespace

double network_objective(const OptimalPolytope& poly, const NetworkParams& params) {
  return objective_on(poly.mode, poly.weight, poly.design, poly.y, params);
}

double network_objective(const Dataset& data, const NetworkParams& params) {
  return objective_on(data.mode, data.weight(), data.design(), data.y, params);
}

double feasibility_violation(const OptimalPolytope& poly, const NetworkParams& params) {
  if (poly.mode == Mode::Regression) return 0.0;
  return (network_output(poly.design, params) - poly.y).lpNorm<Eigen::Infinity>();
}

const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::Merge: return "MERGE";
    case EventKind::Split: return "SPLIT";
    case EventKind::PermutationBridge: return "PERMUTATION_BRIDGE";
    case EventKind::CardinalityChange: return "CARDINALITY_CHANGE";
    case EventKind::Update1: return "UPDATE1";
    case EventKind::Update2Prune: return "UPDATE2_PRUNE";
    case EventKind::Linear: return "LINEAR";
    case EventKind::Descent: return "DESCENT";
  }
  return "UNKNOWN";
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::SumWidths: return "SUM_WIDTHS";
    case Strategy::NPlusOne: return "N_PLUS_ONE";
    case Strategy::Auto: return "AUTO";
  }
  return "UNKNOWN";
}

namespace {

// sin^2 schedule: square roots of the weights then move at bounded speed near both ends.
double ease(int k, int N) {
  const double s = std::sin(0.5 * M_PI * static_cast<double>(k) / static_cast<double>(N));
  return k == N ? 1.0 : s * s;
}

class PathBuilder {
 public:
  void append(const std::vector<NetworkParams>& seg, EventKind kind) {
    if (seg.empty()) return;
    size_t start = (!samples_.empty() && seg.front() == samples_.back()) ? 1 : 0;
    if (start == seg.size()) return;
    // A lone starting sample is not a move.
    if (samples_.empty() && seg.size() == 1) {
      samples_.push_back(seg.front());
      return;
    }
    events_.push_back({kind, 0.0, samples_.empty() ? 0 : static_cast<int>(samples_.size()) - 1});
    for (size_t i = start; i < seg.size(); ++i) samples_.push_back(seg[i]);
  }
  void append(const ParameterPath& p) {
    if (p.samples.empty()) return;
    const bool skip_first = !samples_.empty() && p.samples.front().params == samples_.back();
    const int offset = static_cast<int>(samples_.size()) - (skip_first ? 1 : 0);
    for (const auto& e : p.events) events_.push_back({e.kind, 0.0, std::max(0, e.sample + offset)});
    for (size_t i = skip_first ? 1 : 0; i < p.samples.size(); ++i) samples_.push_back(p.samples[i].params);
  }
  bool empty() const { return samples_.empty(); }
  const NetworkParams& back() const { return samples_.back(); }
  size_t size() const { return samples_.size(); }

  ParameterPath finish() const {
    ParameterPath out;
    std::vector<NetworkParams> s = samples_;
    if (s.size() == 1) s.push_back(s.front());
    const double denom = static_cast<double>(s.size() - 1);
    for (size_t k = 0; k < s.size(); ++k)
      out.samples.push_back({k + 1 == s.size() ? 1.0 : static_cast<double>(k) / denom, s[k]});
    for (const auto& e : events_) out.events.push_back({e.kind, static_cast<double>(e.sample) / denom, e.sample});
    return out;
  }

 private:
  std::vector<NetworkParams> samples_;
  std::vector<PathEvent> events_;
};

NetworkParams permuted(const NetworkParams& p, const std::vector<int>& sigma) {
  NetworkParams out = p;
  for (size_t j = 0; j < sigma.size(); ++j) out.neurons[j] = p.neurons[static_cast<size_t>(sigma[j])];
  return out;
}

ParameterPath reversed(const ParameterPath& p) {
  ParameterPath out;
  for (auto it = p.samples.rbegin(); it != p.samples.rend(); ++it) out.samples.push_back({1.0 - it->t, it->params});
  const int last = static_cast<int>(p.samples.size()) - 1;
  for (auto it = p.events.rbegin(); it != p.events.rend(); ++it) out.events.push_back({it->kind, 1.0 - it->t, std::max(0, last - it->sample - 1)});
  return out;
}

Neuron zero_neuron(int d) { return Neuron{Vec::Zero(d), 0.0}; }

int pattern_index(const OptimalPolytope& poly, const Vec& w) {
  const std::vector<std::uint8_t> m = closed_mask(poly.design, w);
  for (size_t i = 0; i < poly.basis.size(); ++i)
    if (poly.basis[i].mask == m) return static_cast<int>(i);
  // Closed mask is not a full-dimensional region; fall back to a region whose cone holds w.
  for (size_t i = poly.basis.size(); i-- > 0;) {
    ConeHandle cone(poly.design, poly.basis[i]);
    if (cone.contains(w, 1e-9)) return static_cast<int>(i);
  }
  throw Error(ErrorCode::InvalidInput, "neuron lies in no enumerated activation region");
}

int generator_for(const OptimalPolytope& poly, int pattern, int sign) {
  for (int k = 0; k < poly.size(); ++k) {
    const Generator& g = poly.generators[static_cast<size_t>(k)];
    if (g.pattern == pattern && g.sign == sign) return k;
  }
  return -1;
}

NetworkParams zero_network(const OptimalPolytope& poly, int m) {
  NetworkParams p;
  const int d = static_cast<int>(poly.design.cols());
  p.neurons.assign(static_cast<size_t>(m), zero_neuron(d));
  if (poly.has_skip) p.skip = Vec::Zero(d);
  return p;
}

}  // namespace

NetworkParams psi(const OptimalPolytope& poly, const Vec& c, int m) {
  if (c.size() != poly.size()) throw Error(ErrorCode::ShapeMismatch, "coefficient count differs from generator count");
  int support = 0;
  for (Eigen::Index k = 0; k < c.size(); ++k) support += c(k) > 0.0 ? 1 : 0;
  if (support > m)
    throw Error(ErrorCode::WidthTooSmall, "point has " + std::to_string(support) + " nonzero blocks but width is " +
                                              std::to_string(m));
  NetworkParams p = zero_network(poly, m);
  size_t slot = 0;
  for (int k = 0; k < poly.size(); ++k) {
    if (!(c(k) > 0.0)) continue;
    const Generator& g = poly.generators[static_cast<size_t>(k)];
    const double r = std::sqrt(c(k));
    p.neurons[slot++] = Neuron{r * g.direction, g.sign * r};
  }
  if (poly.has_skip) p.skip = poly.skip_for(c);
  return p;
}

ConvexSolution phi(const OptimalPolytope& poly, const NetworkParams& params) {
  const int d = static_cast<int>(poly.design.cols());
  ConvexSolution sol;
  sol.u.assign(poly.basis.size(), Vec::Zero(d));
  sol.v.assign(poly.basis.size(), Vec::Zero(d));
  for (const auto& nr : params.neurons) {
    if (nr.is_zero()) continue;
    const int i = pattern_index(poly, nr.w);
    (nr.alpha > 0 ? sol.u : sol.v)[static_cast<size_t>(i)] += std::abs(nr.alpha) * nr.w;
  }
  sol.skip = poly.has_skip ? (params.skip.size() ? params.skip : Vec(Vec::Zero(d))) : Vec();
  Vec fit = Vec::Zero(poly.n());
  for (size_t i = 0; i < poly.basis.size(); ++i) {
    Vec z = poly.design * (sol.u[i] - sol.v[i]);
    for (Eigen::Index j = 0; j < z.size(); ++j)
      if (!poly.basis[i].mask[static_cast<size_t>(j)]) z(j) = 0.0;
    fit += z;
  }
  if (poly.has_skip) fit += poly.design * sol.skip;
  sol.fit = fit;
  double reg = 0.0;
  for (size_t i = 0; i < poly.basis.size(); ++i) reg += sol.u[i].norm() + sol.v[i].norm();
  sol.objective = poly.mode == Mode::Interpolation ? reg : 0.5 * (fit - poly.y).squaredNorm() + poly.weight * reg;
  return sol;
}

MergeResult merge_minimal(const OptimalPolytope& poly, const NetworkParams& params, int samples) {
  MergeResult out;
  out.params = params;
  PathBuilder pb;
  pb.append(std::vector<NetworkParams>{params}, EventKind::Merge);
  const int m = params.width();
  const int d = static_cast<int>(poly.design.cols());
  bool changed = true;
  while (changed) {
    changed = false;
    NetworkParams& cur = out.params;
    std::vector<int> pat(static_cast<size_t>(m), -1);
    for (int j = 0; j < m; ++j)
      if (!cur.neurons[static_cast<size_t>(j)].is_zero()) pat[static_cast<size_t>(j)] = pattern_index(poly, cur.neurons[static_cast<size_t>(j)].w);
    for (int a = 0; a < m && !changed; ++a) {
      for (int b = a + 1; b < m && !changed; ++b) {
        const Neuron& na = cur.neurons[static_cast<size_t>(a)];
        const Neuron& nb = cur.neurons[static_cast<size_t>(b)];
        if (pat[static_cast<size_t>(a)] < 0 || pat[static_cast<size_t>(a)] != pat[static_cast<size_t>(b)] ||
            na.alpha * nb.alpha <= 0.0)
          continue;
        const double s = na.alpha > 0 ? 1.0 : -1.0;
        const Vec first = na.w * std::abs(na.alpha);
        const Vec second = nb.w * std::abs(nb.alpha);
        const double n2 = second.norm();
        std::vector<NetworkParams> seg;
        for (int k = 0; k <= samples; ++k) {
          const double t = ease(k, samples);
          const double rest = 1.0 - t;
          NetworkParams q = cur;
          const Vec merged = first + t * second;
          const double nm = merged.norm();
          q.neurons[static_cast<size_t>(a)] = nm > 0 ? Neuron{merged / std::sqrt(nm), s * std::sqrt(nm)} : zero_neuron(d);
          if (k == samples || rest <= 0.0)
            q.neurons[static_cast<size_t>(b)] = zero_neuron(d);
          else
            q.neurons[static_cast<size_t>(b)] = Neuron{std::sqrt(rest) * second / std::sqrt(n2), s * std::sqrt(rest * n2)};
          seg.push_back(std::move(q));
        }
        pb.append(seg, EventKind::Merge);
        out.params = seg.back();
        changed = true;
      }
    }
  }
  out.path = pb.finish();
  return out;
}

ReduceResult reduce_support(const Mat& A, const Mat& B, const std::vector<int>& I, const Vec& lambda, const Vec& mu) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = A.cols();
  const Eigen::Index k = B.cols();
  if (B.rows() != n || lambda.size() != m || mu.size() != k)
    throw Error(ErrorCode::ShapeMismatch, "reduce_support operand shapes disagree");
  // Only A needs independent columns; the null-direction moves never use independence of B.
  if (numerical_rank(A) != m) throw Error(ErrorCode::PreconditionViolated, "reduce_support needs independent A");
  double sum_i = 0.0;
  for (int i : I) {
    if (i < 0 || i >= m) throw Error(ErrorCode::PreconditionViolated, "index subset out of range");
    sum_i += lambda(i);
  }
  if (!(sum_i > 0.0)) throw Error(ErrorCode::PreconditionViolated, "start-side weights must have positive sum");
  if (k > 0 && !(mu.minCoeff() > 0.0)) throw Error(ErrorCode::PreconditionViolated, "end-side weights must be positive");
  const double scale = std::max(1.0, (B * mu).norm());
  if ((A * lambda - B * mu).norm() > 1e-8 * scale)
    throw Error(ErrorCode::PreconditionViolated, "weighted sums of the two sets differ");

  const Mat Pc = complement_projector(A, static_cast<int>(n));
  const Mat Apinv = A.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::RowVectorXd sel = Eigen::RowVectorXd::Zero(m);
  for (int i : I) sel(i) = 1.0;

  ReduceResult out;
  out.mu = mu;
  const Eigen::Index limit = n - m + 1;
  while (true) {
    std::vector<int> S;
    for (Eigen::Index j = 0; j < k; ++j)
      if (out.mu(j) > 0.0) S.push_back(static_cast<int>(j));
    if (static_cast<Eigen::Index>(S.size()) <= limit) break;
    Mat Bs(n, static_cast<Eigen::Index>(S.size()));
    for (size_t a = 0; a < S.size(); ++a) Bs.col(static_cast<Eigen::Index>(a)) = B.col(S[a]);
    Mat C(n + 1, Bs.cols());
    C.topRows(n) = Pc * Bs;
    C.row(n) = sel * Apinv * Bs;
    Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullV);
    Vec dir = svd.matrixV().col(Bs.cols() - 1);
    if (dir.minCoeff() >= 0.0) dir = -dir;
    double step = INFINITY;
    int hit = -1;
    for (Eigen::Index a = 0; a < dir.size(); ++a) {
      if (dir(a) < 0.0) {
        const double t = out.mu(S[static_cast<size_t>(a)]) / -dir(a);
        if (t < step) {
          step = t;
          hit = static_cast<int>(a);
        }
      }
    }
    const double top = out.mu.maxCoeff();
    for (Eigen::Index a = 0; a < dir.size(); ++a) {
      double& v = out.mu(S[static_cast<size_t>(a)]);
      v += step * dir(a);
      if (v < 1e-14 * top) v = 0.0;
    }
    out.mu(S[static_cast<size_t>(hit)]) = 0.0;
  }
  out.delta = Apinv * (B * out.mu);
  return out;
}

bool check_reduce_support(const Mat& A, const Mat& B, const std::vector<int>& I, const ReduceResult& r, double tol) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = A.cols();
  if (r.mu.size() != B.cols()) return false;
  if (r.mu.size() && r.mu.minCoeff() < 0.0) return false;
  const Eigen::Index nnz = (r.mu.array() > 0.0).count();
  if (nnz > n - m + 1) return false;
  const Vec v = B * r.mu;
  const Mat Pc = complement_projector(A, static_cast<int>(n));
  if ((Pc * v).norm() > tol * std::max(1.0, v.norm())) return false;
  const Vec delta = A.completeOrthogonalDecomposition().solve(v);
  double s = 0.0;
  for (int i : I) s += delta(i);
  return s > 0.0;
}

namespace {

// Null vector c of the reduced neuron features with a_j c_j < 0 for the first nonzero entry.
ParameterPath create_zero_slot(const OptimalPolytope& poly, const NetworkParams& params, int samples,
                               NetworkParams& result) {
  const int m = params.width();
  const Mat R = poly.reducer();
  Mat H(poly.n(), m);
  for (int j = 0; j < m; ++j)
    H.col(j) = (poly.design * params.neurons[static_cast<size_t>(j)].w).cwiseMax(0.0);
  Eigen::JacobiSVD<Mat> svd(R * H, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  const double top = sv.size() ? sv(0) : 0.0;
  const int rank = static_cast<int>((sv.array() > 1e-9 * std::max(top, 1e-300)).count());
  if (rank == m) throw Error(ErrorCode::NotConnected, "active features are independent; no slot can be emptied");
  Vec c = svd.matrixV().col(m - 1);
  for (int j = 0; j < m; ++j) {
    if (std::abs(c(j)) > 1e-12) {
      if (params.neurons[static_cast<size_t>(j)].alpha * c(j) > 0.0) c = -c;
      break;
    }
  }
  double tm = INFINITY;
  int hit = -1;
  for (int j = 0; j < m; ++j) {
    const double a = params.neurons[static_cast<size_t>(j)].alpha;
    if (a * c(j) < 0.0 && std::abs(c(j)) > 1e-12) {
      const double t = -a / c(j);
      if (t < tm) {
        tm = t;
        hit = j;
      }
    }
  }
  Vec skip_dir;
  if (poly.has_skip) skip_dir = -least_squares(poly.design, H * c);
  std::vector<NetworkParams> seg;
  const int d = static_cast<int>(poly.design.cols());
  for (int k = 0; k <= samples; ++k) {
    const double t = tm * ease(k, samples);
    NetworkParams q = params;
    for (int j = 0; j < m; ++j) {
      const Neuron& nr = params.neurons[static_cast<size_t>(j)];
      const double nw = nr.w.norm();
      const double mag = std::abs(nr.alpha + t * c(j));
      if ((k == samples && j == hit) || nw == 0.0) {
        q.neurons[static_cast<size_t>(j)] = zero_neuron(d);
        continue;
      }
      const double sgn = nr.alpha > 0 ? 1.0 : -1.0;
      q.neurons[static_cast<size_t>(j)] = Neuron{nr.w * std::sqrt(mag / nw), sgn * std::sqrt(nw * mag)};
    }
    if (poly.has_skip) q.skip = params.skip + t * skip_dir;
    seg.push_back(std::move(q));
  }
  result = seg.back();
  PathBuilder pb;
  pb.append(seg, EventKind::CardinalityChange);
  return pb.finish();
}

// Moves the content of slot `from` into the empty slot `to`.
std::vector<NetworkParams> move_slot(const NetworkParams& p, int from, int to, int samples) {
  std::vector<NetworkParams> seg;
  const Neuron src = p.neurons[static_cast<size_t>(from)];
  const int d = static_cast<int>(src.w.size());
  for (int k = 0; k <= samples; ++k) {
    const double ang = 0.5 * M_PI * static_cast<double>(k) / samples;
    const double keep = k == samples ? 0.0 : std::cos(ang);
    const double give = k == samples ? 1.0 : std::sin(ang);
    NetworkParams q = p;
    q.neurons[static_cast<size_t>(from)] = k == samples ? zero_neuron(d) : Neuron{keep * src.w, keep * src.alpha};
    q.neurons[static_cast<size_t>(to)] = k == samples ? src : Neuron{give * src.w, give * src.alpha};
    seg.push_back(std::move(q));
  }
  return seg;
}

bool same_neuron(const Neuron& a, const Neuron& b) {
  if (a.is_zero() && b.is_zero()) return true;
  return a.alpha == b.alpha && a.w == b.w;
}

}  // namespace

ParameterPath permutation_bridge(const OptimalPolytope& poly, const NetworkParams& params,
                                 const std::vector<int>& sigma, int samples) {
  const int m = params.width();
  if (static_cast<int>(sigma.size()) != m) throw Error(ErrorCode::InvalidInput, "permutation length differs from width");
  std::vector<int> seen(static_cast<size_t>(m), 0);
  for (int s : sigma) {
    if (s < 0 || s >= m || seen[static_cast<size_t>(s)]++) throw Error(ErrorCode::InvalidInput, "sigma is not a permutation");
  }
  const NetworkParams target = permuted(params, sigma);
  PathBuilder pb;
  if (target == params) {
    pb.append(std::vector<NetworkParams>{params, params}, EventKind::PermutationBridge);
    return pb.finish();
  }
  const RegimeReport reg = critical_widths(poly);
  if (m < reg.M_star + 1)
    throw Error(ErrorCode::WidthTooSmall, "permutation bridge needs width at least " + std::to_string(reg.M_star + 1));

  PathBuilder lead;
  MergeResult mr = merge_minimal(poly, params, samples);
  lead.append(mr.path);
  NetworkParams cur = mr.params;
  bool has_zero = false;
  for (const auto& nr : cur.neurons) has_zero = has_zero || nr.is_zero();
  if (!has_zero) {
    NetworkParams next;
    lead.append(create_zero_slot(poly, cur, samples, next));
    cur = next;
  }
  const ParameterPath lead_path = lead.finish();
  pb.append(lead_path);

  // Swap contents through an empty slot until cur equals sigma applied to the prepared point.
  const NetworkParams goal = permuted(cur, sigma);
  for (int j = 0; j < m; ++j) {
    if (same_neuron(cur.neurons[static_cast<size_t>(j)], goal.neurons[static_cast<size_t>(j)])) continue;
    int p = -1;
    for (int q = j + 1; q < m; ++q)
      if (same_neuron(cur.neurons[static_cast<size_t>(q)], goal.neurons[static_cast<size_t>(j)]) &&
          !same_neuron(cur.neurons[static_cast<size_t>(q)], goal.neurons[static_cast<size_t>(q)])) {
        p = q;
        break;
      }
    if (p < 0)
      for (int q = j + 1; q < m; ++q)
        if (same_neuron(cur.neurons[static_cast<size_t>(q)], goal.neurons[static_cast<size_t>(j)])) {
          p = q;
          break;
        }
    if (p < 0) throw Error(ErrorCode::NotConnected, "permutation target content not found");
    const bool zj = cur.neurons[static_cast<size_t>(j)].is_zero();
    const bool zp = cur.neurons[static_cast<size_t>(p)].is_zero();
    if (zj) {
      auto seg = move_slot(cur, p, j, samples);
      pb.append(seg, EventKind::PermutationBridge);
      cur = seg.back();
    } else if (zp) {
      auto seg = move_slot(cur, j, p, samples);
      pb.append(seg, EventKind::PermutationBridge);
      cur = seg.back();
    } else {
      int e = -1;
      for (int q = 0; q < m; ++q)
        if (q != j && q != p && cur.neurons[static_cast<size_t>(q)].is_zero()) e = q;
      if (e < 0) throw Error(ErrorCode::NotConnected, "no empty slot available for a swap");
      for (auto [from, to] : {std::pair{j, e}, std::pair{p, j}, std::pair{e, p}}) {
        auto seg = move_slot(cur, from, to, samples);
        pb.append(seg, EventKind::PermutationBridge);
        cur = seg.back();
      }
    }
  }
  // Undo the preparation with slots relabelled by sigma.
  ParameterPath back = reversed(lead_path);
  for (auto& s : back.samples) s.params = permuted(s.params, sigma);
  back.samples.back().params = target;
  pb.append(back);
  return pb.finish();
}

namespace {

struct CoefPath {
  std::vector<Vec> vertices;
  std::vector<EventKind> kinds;  // one per segment
  std::vector<double> outer_mass;

  void push(const Vec& c, EventKind k) {
    if (!vertices.empty() && (c - vertices.back()).lpNorm<Eigen::Infinity>() == 0.0) return;
    if (!vertices.empty()) kinds.push_back(k);
    vertices.push_back(c);
  }
};

std::vector<int> supp(const Vec& c) {
  std::vector<int> s;
  for (Eigen::Index k = 0; k < c.size(); ++k)
    if (c(k) > 0.0) s.push_back(static_cast<int>(k));
  return s;
}

int union_size(const Vec& a, const Vec& b) {
  int u = 0;
  for (Eigen::Index k = 0; k < a.size(); ++k) u += (a(k) > 0.0 || b(k) > 0.0) ? 1 : 0;
  return u;
}

void clean(Vec& c, double scale) {
  for (Eigen::Index k = 0; k < c.size(); ++k)
    if (c(k) < 1e-13 * scale) c(k) = 0.0;
}

// Start-to-end transport between irreducible points with cardinality at most n + 1.
void n_plus_one(const OptimalPolytope& poly, const Vec& ca, const Vec& cb, CoefPath& path) {
  const Mat G = poly.reduced_generators();
  const int K = poly.size();
  const std::vector<int> As = supp(ca), Bs = supp(cb);
  Vec f(static_cast<Eigen::Index>(As.size())), g = Vec::Zero(static_cast<Eigen::Index>(Bs.size()));
  for (size_t i = 0; i < As.size(); ++i) f(static_cast<Eigen::Index>(i)) = ca(As[i]);
  Vec mu(static_cast<Eigen::Index>(Bs.size()));
  for (size_t j = 0; j < Bs.size(); ++j) mu(static_cast<Eigen::Index>(j)) = cb(Bs[j]);
  Mat Bm(G.rows(), static_cast<Eigen::Index>(Bs.size()));
  for (size_t j = 0; j < Bs.size(); ++j) Bm.col(static_cast<Eigen::Index>(j)) = G.col(Bs[j]);
  const double scale = std::max(ca.maxCoeff(), cb.maxCoeff());

  struct Entry {
    bool from_a;
    int idx;
  };
  auto entries = [&]() {
    std::vector<Entry> C;
    for (Eigen::Index i = 0; i < f.size(); ++i)
      if (f(i) > 0.0) C.push_back({true, static_cast<int>(i)});
    for (Eigen::Index j = 0; j < g.size(); ++j)
      if (g(j) > 0.0) C.push_back({false, static_cast<int>(j)});
    return C;
  };
  auto total = [&]() {
    Vec c = Vec::Zero(K);
    for (size_t i = 0; i < As.size(); ++i) c(As[i]) += f(static_cast<Eigen::Index>(i));
    for (size_t j = 0; j < Bs.size(); ++j) c(Bs[j]) += g(static_cast<Eigen::Index>(j));
    return c;
  };
  auto gen_of = [&](const Entry& e) { return e.from_a ? As[static_cast<size_t>(e.idx)] : Bs[static_cast<size_t>(e.idx)]; };
  auto coef = [&](const Entry& e) -> double& { return e.from_a ? f(e.idx) : g(e.idx); };
  auto matrix_of = [&](const std::vector<Entry>& C) {
    Mat M(G.rows(), static_cast<Eigen::Index>(C.size()));
    for (size_t a = 0; a < C.size(); ++a) M.col(static_cast<Eigen::Index>(a)) = G.col(gen_of(C[a]));
    return M;
  };

  const int budget = 10 * std::max(K, 1);
  int outer = 0;
  while (true) {
    std::vector<Entry> C = entries();
    if (std::none_of(C.begin(), C.end(), [](const Entry& e) { return e.from_a; })) break;
    if (++outer > budget) throw Error(ErrorCode::NoConvergence, "transport exceeded its outer iteration budget");

    const Mat Am = matrix_of(C);
    Vec lam(static_cast<Eigen::Index>(C.size()));
    std::vector<int> I;
    for (size_t a = 0; a < C.size(); ++a) {
      lam(static_cast<Eigen::Index>(a)) = coef(C[a]);
      if (C[a].from_a) I.push_back(static_cast<int>(a));
    }
    const ReduceResult r = reduce_support(Am, Bm, I, lam, mu);

    // Update 1: trade delta along C for mu* along the end set.
    double step = INFINITY;
    for (size_t a = 0; a < C.size(); ++a) {
      const double dl = r.delta(static_cast<Eigen::Index>(a));
      const double gain = C[a].from_a ? 0.0 : r.mu(C[a].idx);
      const double shrink = dl - gain;
      if (shrink > 0.0) step = std::min(step, coef(C[a]) / shrink);
    }
    if (!std::isfinite(step)) throw Error(ErrorCode::NoConvergence, "transport step is unbounded");
    for (size_t a = 0; a < C.size(); ++a) coef(C[a]) -= step * r.delta(static_cast<Eigen::Index>(a));
    g += step * r.mu;
    clean(f, scale);
    clean(g, scale);
    path.push(total(), EventKind::Update1);

    // Update 2: prune the active set back to independence, never raising the start-side mass.
    while (true) {
      C = entries();
      const Mat Cm = matrix_of(C);
      Eigen::JacobiSVD<Mat> svd(Cm, Eigen::ComputeFullV);
      const Vec& sv = svd.singularValues();
      const int rank = sv.size() == 0 || sv(0) == 0.0 ? 0 : static_cast<int>((sv.array() > 1e-9 * sv(0)).count());
      if (rank == static_cast<int>(C.size())) break;
      Vec eta = svd.matrixV().col(static_cast<Eigen::Index>(C.size()) - 1);
      double sa = 0.0;
      for (size_t a = 0; a < C.size(); ++a)
        if (C[a].from_a) sa += eta(static_cast<Eigen::Index>(a));
      if (sa < -1e-12 || (std::abs(sa) <= 1e-12 && eta.maxCoeff() <= 0.0)) eta = -eta;
      double s2 = INFINITY;
      for (size_t a = 0; a < C.size(); ++a)
        if (eta(static_cast<Eigen::Index>(a)) > 1e-14) s2 = std::min(s2, coef(C[a]) / eta(static_cast<Eigen::Index>(a)));
      for (size_t a = 0; a < C.size(); ++a) coef(C[a]) -= s2 * eta(static_cast<Eigen::Index>(a));
      clean(f, scale);
      clean(g, scale);
      path.push(total(), EventKind::Update2Prune);
    }
    path.outer_mass.push_back(f.sum());
  }
  path.push(cb, EventKind::Update2Prune);
}

struct Lifter {
  const OptimalPolytope& poly;
  int m;
  int samples;
  std::vector<int> slot_gen;

  NetworkParams build(const Vec& c) const {
    NetworkParams p = zero_network(poly, m);
    for (int s = 0; s < m; ++s) {
      const int k = slot_gen[static_cast<size_t>(s)];
      if (k < 0 || !(c(k) > 0.0)) continue;
      const Generator& g = poly.generators[static_cast<size_t>(k)];
      const double r = std::sqrt(c(k));
      p.neurons[static_cast<size_t>(s)] = Neuron{r * g.direction, g.sign * r};
    }
    if (poly.has_skip) p.skip = poly.skip_for(c);
    return p;
  }

  void segment(const Vec& c0, const Vec& c1, EventKind kind, PathBuilder& pb) {
    for (Eigen::Index k = 0; k < c1.size(); ++k) {
      if (!(c1(k) > 0.0)) continue;
      if (std::find(slot_gen.begin(), slot_gen.end(), static_cast<int>(k)) != slot_gen.end()) continue;
      auto free = std::find(slot_gen.begin(), slot_gen.end(), -1);
      if (free == slot_gen.end())
        throw Error(ErrorCode::NotConnected, "path needs more than " + std::to_string(m) + " neurons");
      *free = static_cast<int>(k);
    }
    std::vector<NetworkParams> seg;
    for (int q = 0; q <= samples; ++q) {
      const double t = ease(q, samples);
      seg.push_back(build((1.0 - t) * c0 + t * c1));
    }
    const bool card_change = supp(c0) != supp(c1);
    pb.append(seg, card_change && kind == EventKind::Linear ? EventKind::CardinalityChange : kind);
    for (auto& k : slot_gen)
      if (k >= 0 && !(c1(k) > 0.0)) k = -1;
  }
};

void check_endpoint(const OptimalPolytope& poly, const NetworkParams& p, const char* which) {
  const double obj = network_objective(poly, p);
  const double tol = 10.0 * TOL_DUAL * std::max(1.0, std::abs(poly.optimal_value));
  if (std::abs(obj - poly.optimal_value) > tol || feasibility_violation(poly, p) > 1e-6 * std::max(1.0, poly.y.lpNorm<Eigen::Infinity>()))
    throw Error(ErrorCode::NotOptimal, std::string(which) + " endpoint is not an optimal network");
  decompose(poly, phi(poly, p));
}

// Slot-to-generator map and coefficients of a minimal network.
Vec coefficients_of(const OptimalPolytope& poly, const NetworkParams& p, std::vector<int>& slots) {
  Vec c = Vec::Zero(poly.size());
  slots.assign(p.neurons.size(), -1);
  for (size_t s = 0; s < p.neurons.size(); ++s) {
    const Neuron& nr = p.neurons[s];
    if (nr.is_zero()) continue;
    const int k = generator_for(poly, pattern_index(poly, nr.w), nr.alpha > 0 ? 1 : -1);
    if (k < 0) throw Error(ErrorCode::NotOptimal, "neuron has no matching optimal direction");
    slots[s] = k;
    c(k) += nr.w.norm() * std::abs(nr.alpha);
  }
  return c;
}

ConnectResult connect_once(const OptimalPolytope& poly, const NetworkParams& a, const NetworkParams& b,
                           Strategy strategy, int samples, const RegimeReport& reg) {
  const int m = a.width();
  const int n = poly.n();
  ConnectResult out;
  Strategy used = strategy;
  if (strategy == Strategy::Auto) used = (m >= n + 1) ? Strategy::NPlusOne : Strategy::SumWidths;
  out.used = used;

  const MergeResult ma = merge_minimal(poly, a, samples);
  const MergeResult mb = merge_minimal(poly, b, samples);
  std::vector<int> slots_a, slots_b;
  const Vec ca = coefficients_of(poly, ma.params, slots_a);
  const Vec cb = coefficients_of(poly, mb.params, slots_b);
  const double scale = std::max(1.0, std::max(ca.maxCoeff(), cb.maxCoeff()));

  const PruneResult pa = prune_to_irreducible(poly, ca);
  const PruneResult pbr = prune_to_irreducible(poly, cb);
  CoefPath cp;
  for (const Vec& v : pa.path) cp.push(v, EventKind::CardinalityChange);
  if (used == Strategy::NPlusOne) {
    n_plus_one(poly, pa.c, pbr.c, cp);
  } else {
    if (union_size(pa.c, pbr.c) <= m) {
      cp.push(pbr.c, EventKind::Linear);
    } else {
      if (reg.witnesses.empty()) throw Error(ErrorCode::NotConnected, "no minimal-cardinality point available");
      Vec cmin;
      if (!solve_on_support(poly, reg.witnesses.front(), cmin))
        throw Error(ErrorCode::NotConnected, "minimal-cardinality point could not be rebuilt");
      clean(cmin, scale);
      if (union_size(pa.c, cmin) > m || union_size(cmin, pbr.c) > m)
        throw Error(ErrorCode::NotConnected, "width " + std::to_string(m) +
                                                 " is too small to interpolate between the irreducible endpoints");
      cp.push(cmin, EventKind::Linear);
      cp.push(pbr.c, EventKind::Linear);
    }
  }
  for (auto it = pbr.path.rbegin(); it != pbr.path.rend(); ++it) cp.push(*it, EventKind::CardinalityChange);
  out.vertices = cp.vertices;
  out.outer_mass = cp.outer_mass;

  PathBuilder pb;
  pb.append(ma.path);
  Lifter lift{poly, m, samples, slots_a};
  for (size_t s = 0; s < lift.slot_gen.size(); ++s)
    if (lift.slot_gen[s] >= 0 && !(ca(lift.slot_gen[s]) > 0.0)) lift.slot_gen[s] = -1;
  {
    std::vector<NetworkParams> start{lift.build(ca)};
    pb.append(start, EventKind::Linear);
  }
  for (size_t v = 0; v + 1 < cp.vertices.size(); ++v) lift.segment(cp.vertices[v], cp.vertices[v + 1], cp.kinds[v], pb);

  // Reorder slots to match the merged end network.
  std::vector<int> sigma(static_cast<size_t>(m), -1);
  std::vector<int> used_slot(static_cast<size_t>(m), 0);
  for (int j = 0; j < m; ++j) {
    const int k = slots_b[static_cast<size_t>(j)];
    if (k < 0) continue;
    auto it = std::find(lift.slot_gen.begin(), lift.slot_gen.end(), k);
    if (it == lift.slot_gen.end()) throw Error(ErrorCode::NotConnected, "end generator missing from transported point");
    sigma[static_cast<size_t>(j)] = static_cast<int>(it - lift.slot_gen.begin());
    used_slot[static_cast<size_t>(sigma[static_cast<size_t>(j)])] = 1;
  }
  for (int j = 0, q = 0; j < m; ++j) {
    if (sigma[static_cast<size_t>(j)] >= 0) continue;
    while (used_slot[static_cast<size_t>(q)]) ++q;
    sigma[static_cast<size_t>(j)] = q;
    used_slot[static_cast<size_t>(q)] = 1;
  }
  bool identity = true;
  for (int j = 0; j < m; ++j) identity = identity && sigma[static_cast<size_t>(j)] == j;
  if (!identity) {
    if (m < reg.M_star + 1)
      throw Error(ErrorCode::NotConnected, "endpoint differs by a permutation and width is below M* + 1");
    pb.append(permutation_bridge(poly, pb.back(), sigma, samples));
  }
  pb.append(reversed(mb.path));
  out.path = pb.finish();
  out.path.samples.front().params = a;
  out.path.samples.back().params = b;
  return out;
}

}  // namespace

ConnectResult connect(const OptimalPolytope& poly, const NetworkParams& a, const NetworkParams& b, Strategy strategy,
                      const ConnectOptions& opts) {
  if (a.width() != b.width()) throw Error(ErrorCode::InvalidInput, "endpoints have different widths");
  if (a.width() < 1) throw Error(ErrorCode::InvalidInput, "endpoints have no neurons");
  check_endpoint(poly, a, "start");
  check_endpoint(poly, b, "end");
  if (a == b) {
    ConnectResult out;
    PathBuilder pb;
    pb.append(std::vector<NetworkParams>{a, b}, EventKind::Linear);
    out.path = pb.finish();
    out.used = strategy;
    return out;
  }
  const RegimeReport reg = critical_widths(poly);
  int samples = std::max(2, opts.samples_per_segment);
  while (true) {
    ConnectResult r = connect_once(poly, a, b, strategy, samples, reg);
    if (static_cast<int>(r.path.samples.size()) >= opts.min_samples || samples > 1 << 16) return r;
    samples *= 2;
  }
}

PathVerification verify_path(const OptimalPolytope& poly, const ParameterPath& path, const VerifyOptions& opts) {
  PathVerification v;
  v.samples = static_cast<int>(path.samples.size());
  if (path.samples.empty()) {
    v.reason = "empty path";
    return v;
  }
  double biggest = 0.0;
  for (const auto& s : path.samples) biggest = std::max(biggest, s.params.flatten().norm());
  v.jump_cap = opts.jump_cap > 0.0 ? opts.jump_cap : 0.25 * std::max(1.0, biggest);
  for (size_t k = 0; k < path.samples.size(); ++k) {
    const NetworkParams& p = path.samples[k].params;
    v.max_deviation = std::max(v.max_deviation, std::abs(network_objective(poly, p) - poly.optimal_value));
    v.max_violation = std::max(v.max_violation, feasibility_violation(poly, p));
    if (k > 0) {
      v.max_jump = std::max(v.max_jump, (p.flatten() - path.samples[k - 1].params.flatten()).norm());
      if (!(path.samples[k].t > path.samples[k - 1].t)) v.reason = "sample times are not increasing";
    }
  }
  if (v.reason.empty()) {
    if (v.max_deviation > opts.tol)
      v.reason = "objective deviates by " + std::to_string(v.max_deviation);
    else if (v.max_violation > opts.tol)
      v.reason = "interpolation violated by " + std::to_string(v.max_violation);
    else if (v.max_jump > v.jump_cap)
      v.reason = "adjacent samples jump by " + std::to_string(v.max_jump);
  }
  v.pass = v.reason.empty();
  return v;
}

}  // namespace cvxrelu
