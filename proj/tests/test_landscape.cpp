#include <doctest.h>

#include "support.hpp"

using namespace cvxrelu;
using namespace testsupport;

TEST_CASE("gradient descent on example 1 reaches the optimum for some seed") {
  const Dataset d = builtin_dataset("example1");
  const double opt = analyze(d).polytope.optimal_value;
  double best = INFINITY;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GDConfig cfg;
    cfg.seed = seed;
    const GDTrace t = train_nonconvex_gd(d, cfg);
    CHECK(t.final_objective >= opt - 1e-9);
    CHECK(t.final_objective >= 0.0975 - 1e-9);
    best = std::min(best, t.final_objective);
  }
  CHECK(best <= 0.0975 + 1e-3);
}

TEST_CASE("descent step matches finite differences of the objective") {
  // One step at a tiny rate exposes the gradient: grad = (before - after) / lr.
  for (const char* name : {"example1", "ce2"}) {
    const Dataset d = regression_view(builtin_dataset(name), 0.1);
    const NetworkParams start = random_network(d, 4, 7, 0.5);
    GDConfig cfg;
    cfg.m = 4;
    cfg.steps = 1;
    cfg.lr = 1e-9;
    const NetworkParams after = gradient_descent(d, start, cfg).params;
    const double h = 1e-6;
    for (size_t j = 0; j < start.neurons.size(); ++j) {
      auto fd = [&](auto&& coord) {
        NetworkParams a = start, b = start;
        coord(a) += h;
        coord(b) -= h;
        return (network_objective(d, a) - network_objective(d, b)) / (2 * h);
      };
      CHECK(std::abs((start.neurons[j].alpha - after.neurons[j].alpha) / cfg.lr -
                     fd([&](NetworkParams& q) -> double& { return q.neurons[j].alpha; })) < 1e-5);
      for (Eigen::Index k = 0; k < start.neurons[j].w.size(); ++k)
        CHECK(std::abs((start.neurons[j].w(k) - after.neurons[j].w(k)) / cfg.lr -
                       fd([&](NetworkParams& q) -> double& { return q.neurons[j].w(k); })) < 1e-5);
    }
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const Dataset d = builtin_dataset("example1");
  GDConfig cfg;
  cfg.lr = 0.0;
  cfg.steps = 50;
  const NetworkParams init = random_network(d, cfg.m, cfg.seed, cfg.init_scale);
  const GDTrace t = train_nonconvex_gd(d, cfg);
  CHECK(t.params == init);
  CHECK(t.final_objective == network_objective(d, init));
}

TEST_CASE("same seed gives the same run") {
  const Dataset d = builtin_dataset("example1");
  GDConfig cfg;
  cfg.steps = 500;
  cfg.seed = 4;
  CHECK(train_nonconvex_gd(d, cfg).params == train_nonconvex_gd(d, cfg).params);
}

TEST_CASE("small step descent is monotone") {
  const Dataset d = builtin_dataset("example1");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GDConfig cfg;
    cfg.lr = 1e-3;
    cfg.steps = 5000;
    cfg.seed = seed;
    cfg.record_every = 1;
    const GDTrace t = train_nonconvex_gd(d, cfg);
    for (size_t k = 1; k < t.objective.size(); ++k) CHECK(t.objective[k].second <= t.objective[k - 1].second + 1e-12);
  }
}

TEST_CASE("large step diverges") {
  const Dataset d = builtin_dataset("example2");
  GDConfig cfg;
  cfg.beta = 0.1;
  cfg.lr = 1e-2;
  try {
    train_nonconvex_gd(d, cfg);
    FAIL("expected DIVERGED");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Diverged);
  }
}

TEST_CASE("gradient descent on example 2 finds different interpolating functions") {
  const Dataset d = builtin_dataset("example2");
  const double opt = analyze(regression_view(d, 0.1)).polytope.optimal_value;
  const Mat probes = Vec::LinSpaced(41, -10.0, 3.0);
  std::vector<Vec> fs;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    GDConfig cfg;
    cfg.beta = 0.1;
    cfg.m = 10;
    cfg.lr = 1e-3;
    cfg.seed = seed;
    const GDTrace t = train_nonconvex_gd(d, cfg);
    CHECK(t.final_objective >= opt - 1e-9);
    fs.push_back(eval_model(t.params, true, probes));
  }
  double spread = 0.0;
  for (size_t a = 0; a < fs.size(); ++a)
    for (size_t b = a + 1; b < fs.size(); ++b) spread = std::max(spread, max_gap(fs[a], fs[b]));
  CHECK(spread > 1e-2);
}

TEST_CASE("slices locate their analytic optima") {
  for (SliceKind k : {SliceKind::M1, SliceKind::M2, SliceKind::M3}) {
    const SliceGrid g = landscape_slice(k, 0.1);
    const SliceCheck c = check_slice(g);
    CHECK_MESSAGE(c.pass, slice_name(k) << ": " << c.reason);
    CHECK(c.grid_min >= g.optimal_value - 1e-12);
    CHECK(std::abs(g.optimal_value - 0.0975) < 1e-15);
  }
}

TEST_CASE("M1 minimum is near (0, r)") {
  const SliceGrid g = landscape_slice(SliceKind::M1, 0.1);
  Eigen::Index i, j;
  g.values.minCoeff(&i, &j);
  const double ht = g.t(1) - g.t(0), hs = g.s(1) - g.s(0);
  CHECK(std::abs(g.t(i)) <= ht);
  CHECK(std::abs(g.s(j) - 0.97468) <= hs);
}

TEST_CASE("M1 slice is mirror symmetric in t") {
  const SliceGrid g = landscape_slice(SliceKind::M1, 0.1);
  const Eigen::Index nt = g.t.size();
  for (Eigen::Index i = 0; i < nt; ++i) {
    CHECK(std::abs(g.t(i) + g.t(nt - 1 - i)) < 1e-12);
    CHECK(max_gap(g.values.row(i).transpose(), g.values.row(nt - 1 - i).transpose()) < 1e-12);
  }
}

TEST_CASE("toy loss is bounded below by the optimum along random parameters") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int q = 0; q < 1000; ++q) {
    const Mat U = Mat::NullaryExpr(2, 3, [&]() { return n(rng); });
    const Vec v = Vec::NullaryExpr(3, [&]() { return n(rng); });
    CHECK(toy_loss(U, v, 0.1) >= 0.0975 - 1e-12);
  }
}

TEST_CASE("nonincreasing demo on example 1") {
  const Dataset d = builtin_dataset("example1");
  const Analysis an = analyze(d);
  const RegimeReport w = critical_widths(an.polytope);
  Vec c;
  REQUIRE(solve_on_support(an.polytope, w.witnesses.front(), c));
  const NetworkParams target = psi(an.polytope, c, 3);
  GDConfig cfg;
  const DemoResult r = nonincreasing_demo(d, random_network(d, 3, 0, cfg.init_scale), target, cfg);
  CHECK(r.nonincreasing);
  CHECK(r.path.samples.back().params == target);
  for (size_t k = 1; k < r.objectives.size(); ++k) CHECK(r.objectives[k] <= r.objectives[k - 1] + TOL_PATH);

  const DemoResult flat = nonincreasing_demo(d, target, target, cfg);
  for (double v : flat.objectives) CHECK(std::abs(v - flat.objectives.front()) <= 1e-12);

  try {
    nonincreasing_demo(d, psi(an.polytope, c, 2), psi(an.polytope, c, 2), cfg);
    FAIL("expected PRECONDITION_VIOLATED");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PreconditionViolated);
  }
}
