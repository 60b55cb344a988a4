#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "cvxrelu/report.hpp"

using namespace cvxrelu;

namespace {

struct Common {
  std::string data_path;
  std::string builtin;
  bool bias = false;
  bool skip = false;
  double beta = std::numeric_limits<double>::quiet_NaN();
  std::string mode;
  std::string out = ".";
  int m = 0;
  std::uint64_t seed = 0;
  std::string strategy = "auto";
  int limit_patterns = 4096;
  int limit_generators = 22;
  bool timing = false;
};

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::LimitExceeded: return 3;
    case ErrorCode::NoConvergence:
    case ErrorCode::Diverged: return 4;
    default: return 2;
  }
}

Mode parse_mode(const std::string& s) {
  if (s == "reg") return Mode::Regression;
  if (s == "interp") return Mode::Interpolation;
  throw Error(ErrorCode::InvalidInput, "mode must be reg or interp");
}

Strategy parse_strategy(const std::string& s) {
  if (s == "sum") return Strategy::SumWidths;
  if (s == "nplus1") return Strategy::NPlusOne;
  if (s == "auto") return Strategy::Auto;
  throw Error(ErrorCode::InvalidInput, "strategy must be sum, nplus1 or auto");
}

Dataset load(const Common& c) {
  if (c.data_path.empty() == c.builtin.empty())
    throw Error(ErrorCode::InvalidInput, "give exactly one of --data and --builtin");
  Dataset d;
  if (!c.builtin.empty()) {
    d = builtin_dataset(c.builtin);
    if (!c.mode.empty()) d.mode = parse_mode(c.mode);
    if (!std::isnan(c.beta)) d.beta = c.beta;
    if (c.bias) d.has_bias = true;
    if (c.skip) d.has_skip = true;
    d.validate();
  } else {
    d = load_dataset_csv(c.data_path, c.bias, c.skip, std::isnan(c.beta) ? 0.0 : c.beta,
                         c.mode.empty() ? Mode::Regression : parse_mode(c.mode));
  }
  return d;
}

AnalysisOptions analysis_options(const Common& c) {
  if (c.limit_patterns < 1) throw Error(ErrorCode::InvalidInput, "--limit-patterns must be positive");
  AnalysisOptions o;
  o.arrangement.max_patterns = static_cast<std::size_t>(c.limit_patterns);
  return o;
}

StaircaseOptions staircase_options(const Common& c) {
  StaircaseOptions o;
  o.max_generators = c.limit_generators;
  return o;
}

std::string out_file(const Common& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  return (std::filesystem::path(c.out) / name).string();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_widths(const RegimeReport& w) {
  std::cout << "m* = " << w.m_star << ", M* = " << w.M_star << "\n";
  for (const auto& r : w.regimes) {
    std::cout << "m=" << r.m << ":";
    for (const auto& f : flag_names(r.flags)) std::cout << " " << f;
    std::cout << "\n";
  }
}

int cmd_analyze(const Common& c, bool with_widths) {
  const Dataset d = load(c);
  ReportTiming tm;
  tm.enabled = c.timing;
  auto t0 = std::chrono::steady_clock::now();
  const Analysis an = analyze(d, analysis_options(c));
  tm.analyze_seconds = seconds_since(t0);
  RegimeReport w;
  if (with_widths) {
    t0 = std::chrono::steady_clock::now();
    w = critical_widths(an.polytope, staircase_options(c));
    tm.widths_seconds = seconds_since(t0);
  }
  write_text(out_file(c, "report.json"), analysis_report_json(d, an, with_widths ? &w : nullptr, tm));
  std::cout << "objective " << fmt17(an.polytope.optimal_value) << "\n";
  std::cout << "generators " << an.polytope.size() << " of " << an.basis.size() << " patterns\n";
  if (with_widths) print_widths(w);
  return 0;
}

int cmd_solve(const Common& c) {
  const Dataset d = load(c);
  const Analysis an = analyze(d, analysis_options(c));
  write_text(out_file(c, "report.json"), analysis_report_json(d, an, nullptr));
  std::cout << "objective " << fmt17(an.report.primal_value) << "\n";
  std::cout << "fit";
  for (Eigen::Index i = 0; i < an.polytope.y_star.size(); ++i) std::cout << " " << fmt17(an.polytope.y_star(i));
  std::cout << "\ngap " << fmt17(an.report.gap) << "\n";
  return 0;
}

Vec witness_point(const OptimalPolytope& poly, const RegimeReport& w, size_t which) {
  Vec c;
  if (!solve_on_support(poly, w.witnesses.at(which), c)) throw Error(ErrorCode::NoSolution, "witness support lost");
  return c;
}

int cmd_connect(const Common& c) {
  const Dataset d = load(c);
  const Analysis an = analyze(d, analysis_options(c));
  const OptimalPolytope& poly = an.polytope;
  const RegimeReport w = critical_widths(poly, staircase_options(c));
  const int m = c.m > 0 ? c.m : std::min(w.m_star + w.M_star, poly.n() + 1);
  // Endpoints: the smallest and the largest irreducible optima found, the second with reversed neuron order.
  const NetworkParams a = psi(poly, witness_point(poly, w, 0), m);
  NetworkParams b = psi(poly, witness_point(poly, w, w.witnesses.size() - 1), m);
  std::reverse(b.neurons.begin(), b.neurons.end());
  const ConnectResult cr = connect(poly, a, b, parse_strategy(c.strategy));
  const PathVerification v = verify_path(poly, cr.path);
  write_text(out_file(c, "path.csv"), path_csv(poly, cr.path));
  std::cout << "strategy " << strategy_name(cr.used) << ", width " << m << ", samples " << v.samples << "\n";
  std::cout << "max deviation " << fmt17(v.max_deviation) << ", max jump " << fmt17(v.max_jump) << "\n";
  std::cout << (v.pass ? "path verified" : "path check failed: " + v.reason) << "\n";
  return v.pass ? 0 : 2;
}

int write_family(const Common& c, const Dataset& d, const std::string& stem) {
  const Analysis an = analyze(d, analysis_options(c));
  FamilyOptions fo;
  fo.max_generators = c.limit_generators;
  const InterpolatorFamily fam = optimal_interpolator_family(an.polytope, fo);
  const Mat probes = probe_grid(d);
  write_text(out_file(c, stem + "probes.csv"), probes_csv(probes));
  write_text(out_file(c, stem + "family.csv"), family_csv(d, an.polytope, fam, probes));
  std::cout << "objective " << fmt17(fam.objective) << ", family dimension " << fam.dimension << ", vertices "
            << fam.vertices.size() << (fam.vertices_complete ? "" : " (capped)") << "\n";
  if (fam.dimension == 1) std::cout << "parameter range [" << fmt17(fam.t_lo) << ", " << fmt17(fam.t_hi) << "]\n";
  return 0;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidInput, "'" + item + "' is not a number");
    }
  }
  return out;
}

int cmd_counterexample(const Common& c, int class_n, const std::string& angles, const std::string& weights) {
  Dataset d;
  if (!c.builtin.empty()) {
    d = load(c);
  } else {
    if (class_n < 2 && angles.empty()) throw Error(ErrorCode::InvalidInput, "give --builtin, --class-n or --angles");
    const std::vector<double> ang = angles.empty() ? equally_spaced_angles(class_n) : parse_list(angles);
    Vec wt = Vec::Ones(static_cast<Eigen::Index>(ang.size() + 1));
    if (!weights.empty()) {
      const auto wl = parse_list(weights);
      wt = Eigen::Map<const Vec>(wl.data(), static_cast<Eigen::Index>(wl.size()));
    }
    d = generate_nonunique_class_from_angles(ang, wt).data;
  }
  write_text(out_file(c, "dataset.csv"), dataset_csv(d));
  if (c.builtin == "ce1" || c.builtin == "ce2") {
    const Analysis an = analyze(d, analysis_options(c));
    std::string s = "network,objective,violation";
    const auto nets = reference_networks(c.builtin);
    for (Eigen::Index k = 0; k < nets[0].flatten().size(); ++k) s += ",p" + std::to_string(k + 1);
    s += "\n";
    for (size_t i = 0; i < nets.size(); ++i) {
      s += std::to_string(i) + "," + fmt17(network_objective(an.polytope, nets[i])) + "," +
           fmt17(feasibility_violation(an.polytope, nets[i]));
      const Vec f = nets[i].flatten();
      for (Eigen::Index k = 0; k < f.size(); ++k) s += "," + fmt17(f(k));
      s += "\n";
    }
    write_text(out_file(c, "networks.csv"), s);
  }
  return write_family(c, d, "");
}

int cmd_landscape(const Common& c, const std::string& slice, int nt, int ns) {
  const double beta = std::isnan(c.beta) ? 0.1 : c.beta;
  SliceOptions o;
  o.nt = nt;
  o.ns = ns;
  const SliceGrid g = landscape_slice(parse_slice(slice), beta, o);
  write_text(out_file(c, "grid.csv"), grid_csv(g));
  const SliceCheck chk = check_slice(g);
  std::cout << "slice " << slice_name(g.kind) << ", grid minimum " << fmt17(chk.grid_min) << ", optimum "
            << fmt17(g.optimal_value) << "\n";
  std::cout << (chk.pass ? "optima located" : "slice check failed: " + chk.reason) << "\n";
  return 0;
}

int cmd_train(const Common& c, GDConfig cfg) {
  const Dataset d = load(c);
  cfg.m = c.m > 0 ? c.m : 3;
  cfg.seed = c.seed;
  const GDTrace tr = train_nonconvex_gd(d, cfg);
  write_text(out_file(c, "trace.csv"), trace_csv(tr));
  const Dataset reg = regression_view(d, cfg.beta);
  const Analysis an = analyze(reg, analysis_options(c));
  std::cout << "final cost " << fmt17(tr.final_objective) << ", convex optimum " << fmt17(an.polytope.optimal_value)
            << "\n";
  return 0;
}

int cmd_demo(const Common& c, GDConfig cfg) {
  const Dataset d = load(c);
  const Dataset reg = regression_view(d, cfg.beta);
  const int m = c.m > 0 ? c.m : reg.n() + 1;
  if (m < reg.n() + 1)
    throw Error(ErrorCode::PreconditionViolated, "demo needs width at least n + 1 = " + std::to_string(reg.n() + 1));
  const Analysis an = analyze(reg, analysis_options(c));
  const RegimeReport w = critical_widths(an.polytope, staircase_options(c));
  const NetworkParams target = psi(an.polytope, witness_point(an.polytope, w, 0), m);
  const NetworkParams start = random_network(reg, m, c.seed, cfg.init_scale);
  const DemoResult res = nonincreasing_demo(reg, start, target, cfg);
  write_text(out_file(c, "path.csv"), path_csv(res.path, res.objectives));
  std::cout << "samples " << res.objectives.size() << ", start cost " << fmt17(res.objectives.front())
            << ", end cost " << fmt17(res.objectives.back()) << ", largest increase " << fmt17(res.max_increase)
            << "\n";
  std::cout << (res.nonincreasing ? "loss nonincreasing" : "loss increased along the path") << "\n";
  return res.nonincreasing ? 0 : 2;
}

void add_data_flags(CLI::App* sub, Common& c) {
  sub->add_option("--data", c.data_path, "dataset CSV with header x1,...,xd,y");
  sub->add_option("--builtin", c.builtin, "builtin dataset: example1, example2, ce1, ce2, appendixH");
  sub->add_flag("--bias", c.bias, "append a constant input");
  sub->add_flag("--skip", c.skip, "add a linear skip connection");
  sub->add_option("--beta", c.beta, "weight decay");
  sub->add_option("--mode", c.mode, "reg or interp");
  sub->add_option("--limit-patterns", c.limit_patterns, "largest arrangement to enumerate");
  sub->add_option("--limit-generators", c.limit_generators, "largest generator set for subset searches");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convex analysis of two-layer ReLU networks with weight decay"};
  app.require_subcommand(1);
  Common c;
  GDConfig gd;
  int class_n = 0, nt = 0, ns = 0;
  std::string angles, weights, slice = "M1";

  auto add = [&](const char* name, const char* help, bool data) {
    CLI::App* s = app.add_subcommand(name, help);
    if (data) add_data_flags(s, c);
    s->add_option("--out", c.out, "output directory");
    s->add_flag("--timing", c.timing, "record wall-clock timing in reports");
    return s;
  };
  CLI::App* s_analyze = add("analyze", "solve, certify and compute critical widths; writes report.json", true);
  CLI::App* s_solve = add("solve", "solve the convex program; writes report.json", true);
  CLI::App* s_widths = add("widths", "critical widths and regime flags; writes report.json", true);
  CLI::App* s_connect = add("connect", "connect two optimal networks; writes path.csv", true);
  s_connect->add_option("--m", c.m, "network width");
  s_connect->add_option("--strategy", c.strategy, "sum, nplus1 or auto");
  CLI::App* s_ce = add("counterexample", "write a non-unique dataset and its interpolator family", true);
  s_ce->add_option("--class-n", class_n, "generate the n-sample class with equally spaced angles");
  s_ce->add_option("--angles", angles, "comma-separated angles of the unit partial sums");
  s_ce->add_option("--weights", weights, "comma-separated conic weights (n + 1)");
  CLI::App* s_family = add("family", "optimal interpolator family; writes family.csv", true);
  CLI::App* s_land = add("landscape", "loss landscape slice; writes grid.csv", false);
  s_land->add_option("--slice", slice, "M1, M2 or M3");
  s_land->add_option("--beta", c.beta, "weight decay in (0, 2)");
  s_land->add_option("--nt", nt, "grid points along t");
  s_land->add_option("--ns", ns, "grid points along s");
  CLI::App* s_train = add("train", "gradient descent on the network; writes trace.csv", true);
  CLI::App* s_demo = add("demo-corollary1", "descent plus transport with nonincreasing loss; writes path.csv", true);
  for (CLI::App* s : {s_train, s_demo}) {
    s->add_option("--m", c.m, "network width");
    s->add_option("--seed", c.seed, "random seed");
    s->add_option("--lr", gd.lr, "learning rate");
    s->add_option("--steps", gd.steps, "gradient steps");
    s->add_option("--init-scale", gd.init_scale, "uniform initialization half-width");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: INVALID_INPUT: " << e.what() << "\n";
    return 2;
  }

  try {
    if (!std::isnan(c.beta)) gd.beta = c.beta;
    if (s_analyze->parsed()) return cmd_analyze(c, true);
    if (s_widths->parsed()) return cmd_analyze(c, true);
    if (s_solve->parsed()) return cmd_solve(c);
    if (s_connect->parsed()) return cmd_connect(c);
    if (s_ce->parsed()) return cmd_counterexample(c, class_n, angles, weights);
    if (s_family->parsed()) return write_family(c, load(c), "");
    if (s_land->parsed()) return cmd_landscape(c, slice, nt, ns);
    if (s_train->parsed()) return cmd_train(c, gd);
    if (s_demo->parsed()) return cmd_demo(c, gd);
  } catch (const Error& e) {
    std::cerr << "error: " << error_tag(e.code()) << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: INTERNAL: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
