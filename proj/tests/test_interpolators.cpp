#include <doctest.h>

#include "support.hpp"

using namespace cvxrelu;
using namespace testsupport;

TEST_CASE("example 2 dataset from equally spaced angles") {
  const Dataset d = builtin_dataset("example2");
  const Vec want = vec({std::tan(M_PI / 3), -std::tan(5 * M_PI / 24), -std::tan(7 * M_PI / 24),
                        -std::tan(9 * M_PI / 24), -std::tan(11 * M_PI / 24)});
  CHECK(max_gap(d.x.col(0), want) < 1e-12);
  const Vec rounded = vec({94, 29, 24, 20, 20});
  for (int i = 0; i < 5; ++i) CHECK(std::abs(d.y(i) - rounded(i)) < 1.0);
}

TEST_CASE("two-sample class sits at minus and plus sqrt 3") {
  const NonuniqueClass c = generate_nonunique_class_from_angles(equally_spaced_angles(2), Vec::Ones(3));
  CHECK(max_gap(c.data.x.col(0), vec({-std::sqrt(3.0), std::sqrt(3.0)})) < 1e-12);
  CHECK(max_gap(c.v[0], vec({-std::sqrt(3.0) / 2, 0.5})) < 1e-12);
}

TEST_CASE("class premises are validated") {
  std::vector<Vec> v = {vec({-std::sqrt(3.0) / 2, 0.5}), vec({0.5, std::sqrt(3.0) / 2})};
  try {
    generate_nonunique_class(v, Vec::Ones(3));
    FAIL("expected INVALID_GEOMETRY");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidGeometry);
  }
}

TEST_CASE("generated class matches its predicted multiplier and directions") {
  for (int n : {2, 3, 4, 5, 6}) {
    const NonuniqueClass c = generate_nonunique_class_from_angles(equally_spaced_angles(n), Vec::Ones(n + 1));
    const Analysis an = analyze(c.data);
    CHECK(max_gap(an.polytope.nu, c.predicted_nu) < 1e-6);
    for (const Vec& s : c.directions) {
      const Vec u = s.normalized();
      bool found = false;
      for (const auto& g : an.polytope.generators) found = found || max_gap(g.direction, u) < 1e-6;
      CHECK(found);
    }
  }
}

TEST_CASE("example 2 family") {
  const OptimalPolytope p = analyze(builtin_dataset("example2")).polytope;
  const InterpolatorFamily fam = optimal_interpolator_family(p);
  REQUIRE(fam.dimension == 1);
  CHECK(std::abs(fam.objective - 60.0) < 1e-4);
  CHECK(fam.t_lo == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::abs(fam.t_hi - 1.5194) < 1e-2);
  // The reference generator points along (-sqrt3/2, 1/2).
  CHECK(max_gap(p.generators[static_cast<size_t>(fam.reference)].direction, vec({-std::sqrt(3.0) / 2, 0.5})) < 1e-6);
  // Slopes of the other coefficients agree with the printed ones to three significant digits.
  const Vec slope = (fam.hi - fam.lo) / (fam.t_hi - fam.t_lo);
  const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0), r6 = std::sqrt(6.0);
  const std::vector<std::pair<Vec, double>> printed = {
      {vec({r3 / 2, 0.5}), -7.076}, {vec({r2 / 2, r2 / 2}), 13.1592}, {vec({0.5, r3 / 2}), -13.1623},
      {vec({(r6 - r2) / 4, (r6 + r2) / 4}), 13.159}, {vec({0.0, 1.0}), -7.081}};
  for (const auto& [dir, s] : printed)
    for (int k = 0; k < p.size(); ++k)
      if (max_gap(p.generators[static_cast<size_t>(k)].direction, dir) < 1e-6)
        CHECK(std::abs(slope(k) - s) <= 5e-3 * std::abs(s));
  const Mat G = p.generator_matrix();
  const Mat probes = Vec::LinSpaced(41, -10.0, 3.0);
  Vec first, last;
  for (int i = 0; i < 20; ++i) {
    const double t = fam.t_lo + (fam.t_hi - fam.t_lo) * i / 19.0;
    const Vec c = fam.point(t);
    CHECK(c.minCoeff() >= -1e-12);
    CHECK((G * c - p.y).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(std::abs(p.value_of(c) - fam.objective) <= 1e-8);
    const Vec f = eval_model(psi(p, c, p.size()), true, probes);
    if (i == 0) first = f;
    last = f;
  }
  CHECK(max_gap(first, last) > 1e-3);
}

TEST_CASE("example 1 family in generator coordinates") {
  const OptimalPolytope p = analyze(builtin_dataset("example1")).polytope;
  const InterpolatorFamily fam = optimal_interpolator_family(p);
  REQUIRE(fam.dimension == 1);
  CHECK(std::abs(fam.t_lo) < 1e-9);
  CHECK(std::abs(fam.t_hi - 0.475) < 1e-8);
  CHECK(std::abs(fam.objective - 0.0975) < 1e-8);
}

TEST_CASE("ce1 family has at least two vertices of cost 1") {
  const OptimalPolytope p = analyze(builtin_dataset("ce1")).polytope;
  const InterpolatorFamily fam = optimal_interpolator_family(p);
  CHECK(fam.vertices.size() >= 2);
  CHECK(std::abs(fam.objective - 1.0) < 1e-8);
  for (const Vec& v : fam.vertices) CHECK(std::abs(p.value_of(v) - 1.0) < 1e-8);
}

TEST_CASE("ce2 second interpolator at (0.5, 0) is zero") {
  const auto nets = reference_networks("ce2");
  Mat probe(1, 2);
  probe << 0.5, 0.0;
  CHECK(std::abs(eval_model(nets[1], true, probe)(0)) < 1e-12);
}

TEST_CASE("zero network evaluates to zero") {
  NetworkParams z;
  z.neurons = {Neuron{Vec::Zero(2), 0.0}};
  CHECK(eval_model(z, true, Vec::LinSpaced(5, -1.0, 1.0)).norm() == 0.0);
}

TEST_CASE("builtins reproduce their objectives") {
  const std::vector<std::pair<std::string, double>> want = {
      {"ce1", 1.0}, {"ce2", 4.0}, {"example1", 0.0975}, {"example2", 60.0}};
  for (const auto& [name, obj] : want) CHECK(std::abs(analyze(builtin_dataset(name)).polytope.optimal_value - obj) < 1e-4);
  CHECK_NOTHROW(analyze(builtin_dataset("appendixH")));
  CHECK_THROWS(builtin_dataset("nope"));
}
