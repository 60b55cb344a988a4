#include <doctest.h>

#include "support.hpp"

using namespace cvxrelu;
using namespace testsupport;

TEST_CASE("example 1 regression optimum") {
  const Dataset d = builtin_dataset("example1");
  const PatternBasis b = enumerate_patterns(d.design());
  const SolveReport r = solve(d, b);
  const double beta = d.beta;
  CHECK(std::abs(r.primal_value - (beta - beta * beta / 4.0)) < 1e-6);
  CHECK(max_gap(r.solution.fit, vec({0.95, 0.95})) < 1e-6);
  CHECK(r.gap <= TOL_DUAL);
  CHECK(std::abs(objective(d, b, r.solution) - 0.0975) < 1e-6);
}

TEST_CASE("zero solution objective is half the squared labels") {
  const Dataset d = builtin_dataset("example1");
  const PatternBasis b = enumerate_patterns(d.design());
  ConvexSolution z;
  z.u.assign(b.size(), Vec::Zero(2));
  z.v.assign(b.size(), Vec::Zero(2));
  CHECK(objective(d, b, z) == doctest::Approx(1.0));
}

TEST_CASE("objective rejects mismatched shapes") {
  const Dataset d = builtin_dataset("example1");
  const PatternBasis b = enumerate_patterns(d.design());
  ConvexSolution z;
  z.u.assign(1, Vec::Zero(2));
  z.v.assign(1, Vec::Zero(2));
  try {
    objective(d, b, z);
    FAIL("expected SHAPE_MISMATCH");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("zero labels give the zero solution") {
  Dataset d = builtin_dataset("example1");
  d.y.setZero();
  const PatternBasis b = enumerate_patterns(d.design());
  const SolveReport r = solve(d, b);
  CHECK(r.primal_value == 0.0);
  CHECK(r.solution.fit.norm() == 0.0);
}

TEST_CASE("example 2 interpolation optimum is 60") {
  const Dataset d = builtin_dataset("example2");
  const SolveReport r = solve(d, enumerate_patterns(d.design()));
  CHECK(std::abs(r.primal_value - 60.0) < 1e-4);
  CHECK((r.solution.fit - d.y).lpNorm<Eigen::Infinity>() <= TOL_FEAS * (1.0 + d.y.lpNorm<Eigen::Infinity>()) * 10);
}

TEST_CASE("unreachable interpolation target is infeasible") {
  // Both samples sit on the same input; no network separates their labels.
  Dataset d;
  d.x.resize(2, 1);
  d.x << 1.0, 1.0;
  d.y = vec({1.0, 2.0});
  d.mode = Mode::Interpolation;
  try {
    solve(d, enumerate_patterns(d.design()));
    FAIL("expected INFEASIBLE");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Infeasible);
  }
}

TEST_CASE("duality gap on random instances") {
  std::mt19937_64 rng(21);
  const double betas[] = {0.05, 0.1, 0.5};
  for (int k = 0; k < 50; ++k) {
    const Dataset d = random_instance(rng, 2 + k % 5, 1 + k % 2, betas[k % 3]);
    const PatternBasis b = enumerate_patterns(d.design());
    const SolveReport r = solve(d, b);
    CHECK(r.gap <= TOL_DUAL);
    for (size_t i = 0; i < b.size(); ++i) {
      const ConeHandle cone(d.design(), b[i]);
      CHECK(cone.contains(r.solution.u[i], 1e-8));
      CHECK(cone.contains(r.solution.v[i], 1e-8));
    }
  }
}

TEST_CASE("solver agrees with the direction-fan lasso oracle") {
  std::mt19937_64 rng(33);
  for (int k = 0; k < 20; ++k) {
    const Dataset d = random_instance(rng, 2 + k % 3, 1, k % 2 ? 0.1 : 0.3);
    const SolveReport r = solve(d, enumerate_patterns(d.design()));
    const double oracle = lasso_oracle(d.design(), d.y, d.beta);
    CHECK(oracle >= r.primal_value - 1e-8);
    CHECK_MESSAGE(std::abs(oracle - r.primal_value) <= 1e-4, "oracle " << oracle << " solver " << r.primal_value << " n " << d.n());
  }
}

TEST_CASE("rerun gives the same fit") {
  std::mt19937_64 rng(4);
  const Dataset d = random_instance(rng, 5, 2, 0.1);
  const PatternBasis b = enumerate_patterns(d.design());
  SolverOptions o;
  o.rho0 = 3.0;
  CHECK(max_gap(solve(d, b).solution.fit, solve(d, b, o).solution.fit) <= 10 * TOL_DUAL);
}

TEST_CASE("interpolation objective is positively homogeneous in the labels") {
  const Dataset d = builtin_dataset("appendixH");
  Dataset s = d;
  s.y *= 3.0;
  const double a = solve(d, enumerate_patterns(d.design())).primal_value;
  const double b = solve(s, enumerate_patterns(s.design())).primal_value;
  CHECK(std::abs(b - 3.0 * a) < 1e-6);
}
