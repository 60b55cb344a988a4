#include "cvxrelu/arrangement.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cvxrelu/linalg.hpp"
#include "cvxrelu/nnls.hpp"

namespace cvxrelu {

std::string ActivationPattern::to_string() const {
  std::string s;
  s.reserve(mask.size());
  for (auto b : mask) s.push_back(b ? '1' : '0');
  return s;
}

ConeHandle::ConeHandle(const Mat& design, const ActivationPattern& p) : pattern(p) {
  constraints = design;
  for (Eigen::Index j = 0; j < design.rows(); ++j)
    if (!p.mask[static_cast<size_t>(j)]) constraints.row(j) *= -1.0;
}

bool ConeHandle::contains(const Vec& u, double tol) const {
  const double scale = std::max(1.0, u.norm());
  for (Eigen::Index j = 0; j < constraints.rows(); ++j) {
    if (constraints.row(j).dot(u) < -tol * scale * std::max(1.0, constraints.row(j).norm()))
      return false;
  }
  return true;
}

Mat ConeHandle::masked_design(const Mat& design) const {
  Mat out = design;
  for (Eigen::Index j = 0; j < design.rows(); ++j)
    if (!pattern.mask[static_cast<size_t>(j)]) out.row(j).setZero();
  return out;
}

namespace {

// Strict feasibility of s_j a_j . h > 0 over the given rows; returns a witness.
bool strict_region(const Mat& unit_rows, const std::vector<int>& signs, Vec& witness) {
  const Eigen::Index k = static_cast<Eigen::Index>(signs.size());
  Mat G(k, unit_rows.cols());
  for (Eigen::Index j = 0; j < k; ++j) G.row(j) = signs[static_cast<size_t>(j)] * unit_rows.row(j);
  LdpResult r = ldp(G, Vec::Ones(k), 100 * static_cast<int>(k + unit_rows.cols() + 1));
  if (!r.feasible) return false;
  Vec margins = G * r.h;
  const double hn = r.h.norm();
  if (hn == 0.0 || !(margins.minCoeff() > 1e-12 * hn)) return false;
  witness = r.h;
  return true;
}

}  // namespace

PatternBasis enumerate_patterns(const Mat& design, const ArrangementOptions& opts) {
  const Eigen::Index n = design.rows();
  const Eigen::Index d = design.cols();
  if (n == 0 || d == 0) throw Error(ErrorCode::InvalidInput, "empty design matrix");

  // Deduplicate identical rows; every copy shares the sign of its representative.
  std::vector<int> rep(static_cast<size_t>(n));
  std::vector<int> uniq;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double nrm = design.row(j).norm();
    if (!(nrm > 0.0))
      throw Error(ErrorCode::DegenerateData, "sample " + std::to_string(j) + " is a zero row");
    int found = -1;
    for (size_t q = 0; q < uniq.size(); ++q)
      if (design.row(uniq[q]) == design.row(j)) found = static_cast<int>(q);
    if (found < 0) {
      uniq.push_back(static_cast<int>(j));
      found = static_cast<int>(uniq.size()) - 1;
    }
    rep[static_cast<size_t>(j)] = found;
  }
  const Eigen::Index u = static_cast<Eigen::Index>(uniq.size());
  Mat rows(u, d);
  for (Eigen::Index q = 0; q < u; ++q)
    rows.row(q) = design.row(uniq[static_cast<size_t>(q)]) / design.row(uniq[static_cast<size_t>(q)]).norm();

  struct Partial {
    std::vector<int> signs;
    Vec witness;
  };
  std::vector<Partial> regions(1);
  regions[0].witness = Vec::Zero(d);

  for (Eigen::Index q = 0; q < u; ++q) {
    std::vector<Partial> next;
    const Mat head = rows.topRows(q + 1);
    for (const Partial& r : regions) {
      const double side = rows.row(q).dot(r.witness);
      for (int s : {1, -1}) {
        Partial child;
        child.signs = r.signs;
        child.signs.push_back(s);
        if (q > 0 && side * s > 1e-12 * r.witness.norm()) {
          child.witness = r.witness;  // parent witness already lies strictly on this side
          next.push_back(std::move(child));
          continue;
        }
        Vec h;
        if (strict_region(head, child.signs, h)) {
          child.witness = h;
          next.push_back(std::move(child));
        }
      }
    }
    regions = std::move(next);
    if (regions.size() > opts.max_patterns)
      throw Error(ErrorCode::LimitExceeded, "pattern count exceeds the cap of " +
                                                std::to_string(opts.max_patterns));
  }

  PatternBasis out;
  out.reserve(regions.size());
  for (const Partial& r : regions) {
    ActivationPattern p;
    p.mask.resize(static_cast<size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j)
      p.mask[static_cast<size_t>(j)] = r.signs[static_cast<size_t>(rep[static_cast<size_t>(j)])] > 0 ? 1 : 0;
    p.witness = r.witness / r.witness.norm();
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const ActivationPattern& a, const ActivationPattern& b) { return a.mask < b.mask; });
  return out;
}

Vec project_onto_cone(const ConeHandle& cone, const Vec& w) {
  // Moreau: w = P_K(w) + P_polar(w), and the polar cone is {-G^T l : l >= 0}.
  const Mat& G = cone.constraints;
  if (w.size() != G.cols()) throw Error(ErrorCode::ShapeMismatch, "vector width differs from cone width");
  if ((G * w).minCoeff() >= 0.0) return w;
  NnlsResult r = nnls(G.transpose(), -w, 100 * static_cast<int>(G.rows()));
  return r.residual;  // G^T l + w
}

double cover_bound(int n, int d) {
  if (n <= 0 || d <= 0) return 0.0;
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += binomial(n - 1, k);
  return 2.0 * s;
}

std::vector<std::uint8_t> closed_mask(const Mat& design, const Vec& w, double rel_tol) {
  std::vector<std::uint8_t> m(static_cast<size_t>(design.rows()));
  const double wn = w.norm();
  for (Eigen::Index j = 0; j < design.rows(); ++j) {
    const double v = design.row(j).dot(w);
    m[static_cast<size_t>(j)] = v >= -rel_tol * design.row(j).norm() * wn ? 1 : 0;
  }
  return m;
}

}  // namespace cvxrelu
