#include <doctest.h>

#include "support.hpp"

using namespace cvxrelu;
using namespace testsupport;

TEST_CASE("dataset csv round trip") {
  const Dataset d = builtin_dataset("example2");
  const Dataset back = parse_dataset_csv(dataset_csv(d), true, false, 0.0, Mode::Interpolation);
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
}

TEST_CASE("csv errors") {
  CHECK_THROWS_AS(parse_dataset_csv("", false, false, 0.1, Mode::Regression), Error);
  CHECK_THROWS_AS(parse_dataset_csv("x1,y\n", false, false, 0.1, Mode::Regression), Error);
  CHECK_THROWS_AS(parse_dataset_csv("a,b\n1,2\n", false, false, 0.1, Mode::Regression), Error);
  CHECK_THROWS_AS(parse_dataset_csv("x1,y\n1,abc\n", false, false, 0.1, Mode::Regression), Error);
  CHECK_THROWS_AS(parse_dataset_csv("x1,y\n1,2,3\n", false, false, 0.1, Mode::Regression), Error);
  CHECK_THROWS_AS(parse_dataset_csv("x1,y\n1,2\n", false, false, 0.0, Mode::Regression), Error);
}

TEST_CASE("fmt17 round trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02e23}) CHECK(std::stod(fmt17(v)) == v);
}

TEST_CASE("report round trip revalidates the certificate") {
  for (const char* name : {"example1", "example2", "ce1", "ce2", "appendixH"}) {
    const Dataset d = builtin_dataset(name);
    const Analysis an = analyze(d);
    const RegimeReport w = critical_widths(an.polytope);
    const std::string text = analysis_report_json(d, an, &w);
    CHECK(text == analysis_report_json(d, an, &w));
    const LoadedReport rep = parse_report(text);
    CHECK(rep.schema_version == REPORT_SCHEMA_VERSION);
    CHECK(rep.m_star == w.m_star);
    CHECK(rep.M_star == w.M_star);
    const CertificateCheck chk = revalidate_certificate(d, rep);
    CHECK_MESSAGE(chk.pass, name << ": " << chk.reason);
    LoadedReport bad = rep;
    bad.nu *= 2.0;
    CHECK_FALSE(revalidate_certificate(d, bad).pass);
  }
}

TEST_CASE("report loading ignores unknown fields") {
  const std::string text =
      R"({"schema_version":1,"objective":0.0975,"y_star":[0.95,0.95],"nu_star":[-0.05,-0.05],"extra":{"a":1}})";
  const LoadedReport r = parse_report(text);
  CHECK(r.objective == 0.0975);
  CHECK(revalidate_certificate(builtin_dataset("example1"), r).pass);
  CHECK_THROWS_AS(parse_report("{"), Error);
  CHECK_THROWS_AS(parse_report(R"({"schema_version":1})"), Error);
}

TEST_CASE("csv writers have fixed headers") {
  const SliceGrid g = landscape_slice(SliceKind::M1, 0.1);
  CHECK(grid_csv(g).rfind("t,s,F\n", 0) == 0);
  GDTrace tr;
  tr.objective = {{0, 1.0}, {100, 0.5}};
  CHECK(trace_csv(tr) == "step,cost\n0,1\n100,0.5\n");
  const Dataset d = builtin_dataset("example1");
  const OptimalPolytope p = analyze(d).polytope;
  const InterpolatorFamily fam = optimal_interpolator_family(p);
  const Mat probes = probe_grid(d);
  const std::string f = family_csv(d, p, fam, probes);
  CHECK(f.rfind("member,t,objective,residual,c1,c2,c3,f1,", 0) == 0);
  CHECK(std::count(f.begin(), f.end(), '\n') == 21);
}
