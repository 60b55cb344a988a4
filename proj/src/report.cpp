#include "cvxrelu/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cvxrelu {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write '" + path + "'");
  out << text;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
  }
  return out;
}

double parse_number(const std::string& s, int line) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidInput, "line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec json_vec(const json& a) {
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

std::string mask_string(const std::vector<std::uint8_t>& m) {
  std::string s;
  for (auto b : m) s += b ? '1' : '0';
  return s;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& text, bool bias, bool skip, double beta, Mode mode) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line, ',');
    if (header.empty()) {
      header = cells;
      if (header.size() < 2 || header.back() != "y")
        throw Error(ErrorCode::InvalidInput, "header must read x1,...,xd,y");
      for (size_t k = 0; k + 1 < header.size(); ++k)
        if (header[k] != "x" + std::to_string(k + 1)) throw Error(ErrorCode::InvalidInput, "header must read x1,...,xd,y");
      continue;
    }
    if (cells.size() != header.size())
      throw Error(ErrorCode::InvalidInput, "line " + std::to_string(lineno) + ": expected " +
                                               std::to_string(header.size()) + " fields");
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(parse_number(c, lineno));
    rows.push_back(std::move(r));
  }
  if (header.empty() || rows.empty()) throw Error(ErrorCode::InvalidInput, "dataset has no samples");
  const int d = static_cast<int>(header.size()) - 1;
  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(rows.size()), d);
  data.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int k = 0; k < d; ++k) data.x(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<size_t>(k)];
    data.y(static_cast<Eigen::Index>(i)) = rows[i][static_cast<size_t>(d)];
  }
  data.has_bias = bias;
  data.has_skip = skip;
  data.beta = beta;
  data.mode = mode;
  data.validate();
  return data;
}

Dataset load_dataset_csv(const std::string& path, bool bias, bool skip, double beta, Mode mode) {
  return parse_dataset_csv(read_text(path), bias, skip, beta, mode);
}

std::string dataset_csv(const Dataset& data) {
  std::string s;
  for (Eigen::Index k = 0; k < data.x.cols(); ++k) s += "x" + std::to_string(k + 1) + ",";
  s += "y\n";
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index k = 0; k < data.x.cols(); ++k) s += fmt17(data.x(i, k)) + ",";
    s += fmt17(data.y(i)) + "\n";
  }
  return s;
}

std::string analysis_report_json(const Dataset& data, const Analysis& an, const RegimeReport* widths,
                                 const ReportTiming& timing) {
  const OptimalPolytope& poly = an.polytope;
  json j;
  j["schema_version"] = REPORT_SCHEMA_VERSION;
  j["tool_version"] = TOOL_VERSION;
  j["dataset"] = {{"n", data.n()},
                  {"d", data.x.cols()},
                  {"bias", data.has_bias},
                  {"skip", data.has_skip},
                  {"beta", data.beta},
                  {"mode", data.mode == Mode::Regression ? "reg" : "interp"}};
  j["objective"] = poly.optimal_value;
  j["y_star"] = vec_json(poly.y_star);
  j["nu_star"] = vec_json(poly.nu);
  json gens = json::array();
  for (const auto& g : poly.generators) {
    gens.push_back({{"pattern", mask_string(poly.basis[static_cast<size_t>(g.pattern)].mask)},
                    {"sign", g.sign},
                    {"direction", vec_json(g.direction)},
                    {"generator", vec_json(g.vector)},
                    {"canonical", g.canonical}});
  }
  j["generators"] = gens;
  j["patterns"] = poly.basis.size();
  if (widths) {
    j["m_star"] = widths->m_star;
    j["M_star"] = widths->M_star;
    json regs = json::array();
    for (const auto& r : widths->regimes) regs.push_back({{"m", r.m}, {"flags", flag_names(r.flags)}});
    j["regimes"] = regs;
  }
  j["solver"] = {{"iterations", an.report.iterations},
                 {"primal_value", an.report.primal_value},
                 {"dual_value", an.report.dual_value},
                 {"gap", an.report.gap},
                 {"primal_residual", an.report.primal_residual},
                 {"dual_residual", an.report.dual_residual},
                 {"rho", an.report.rho},
                 {"certificate_gap", an.certificate.gap},
                 {"certificate_max_ratio", an.certificate.max_ratio}};
  if (timing.enabled)
    j["timing"] = {{"analyze_seconds", timing.analyze_seconds}, {"widths_seconds", timing.widths_seconds}};
  return j.dump(2) + "\n";
}

LoadedReport parse_report(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("report is not valid JSON: ") + e.what());
  }
  LoadedReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    r.objective = j.at("objective").get<double>();
    r.y_star = json_vec(j.at("y_star"));
    r.nu = json_vec(j.at("nu_star"));
    if (j.contains("m_star")) r.m_star = j["m_star"].get<int>();
    if (j.contains("M_star")) r.M_star = j["M_star"].get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("report is missing a field: ") + e.what());
  }
  if (r.schema_version > REPORT_SCHEMA_VERSION)
    throw Error(ErrorCode::InvalidInput, "report schema version " + std::to_string(r.schema_version) + " is newer than supported");
  return r;
}

CertificateCheck revalidate_certificate(const Dataset& data, const LoadedReport& rep) {
  CertificateCheck out;
  if (rep.nu.size() != data.n() || rep.y_star.size() != data.n()) {
    out.reason = "certificate length differs from the dataset";
    return out;
  }
  const Mat X = data.design();
  const PatternBasis basis = enumerate_patterns(X);
  const auto cones = make_cones(X, basis);
  const DualValue dv = evaluate_dual(data, cones, rep.nu);
  out.max_ratio = dv.max_ratio;
  out.dual_value = dv.value;
  out.gap = std::abs(rep.objective - dv.value);
  const double scale = std::max(1.0, std::abs(rep.objective));
  if (dv.max_ratio > 1.0 + TOL_DIR) {
    out.reason = "dual constraint violated: ratio " + fmt17(dv.max_ratio);
  } else if (out.gap > TOL_DUAL * scale) {
    out.reason = "duality gap " + fmt17(out.gap) + " exceeds tolerance";
  } else if (data.mode == Mode::Regression &&
             (rep.y_star - data.y - rep.nu).lpNorm<Eigen::Infinity>() > 1e-8 * std::max(1.0, data.y.norm())) {
    out.reason = "nu differs from y* - y";
  } else if (data.mode == Mode::Interpolation &&
             (rep.y_star - data.y).lpNorm<Eigen::Infinity>() > 1e-8 * std::max(1.0, data.y.norm())) {
    out.reason = "interpolation fit differs from y";
  } else if (data.has_skip && (X.transpose() * rep.nu).norm() > 1e-8 * std::max(1.0, rep.nu.norm())) {
    out.reason = "nu is not orthogonal to the skip range";
  }
  out.pass = out.reason.empty();
  return out;
}

std::string path_csv(const ParameterPath& path, const std::vector<double>& objectives) {
  std::string s = "t";
  const Eigen::Index P = path.samples.empty() ? 0 : path.samples.front().params.flatten().size();
  for (Eigen::Index k = 0; k < P; ++k) s += ",p" + std::to_string(k + 1);
  s += ",objective\n";
  for (size_t i = 0; i < path.samples.size(); ++i) {
    s += fmt17(path.samples[i].t);
    const Vec f = path.samples[i].params.flatten();
    for (Eigen::Index k = 0; k < f.size(); ++k) s += "," + fmt17(f(k));
    s += "," + fmt17(objectives[i]) + "\n";
  }
  return s;
}

std::string path_csv(const OptimalPolytope& poly, const ParameterPath& path) {
  std::vector<double> obj;
  for (const auto& smp : path.samples) obj.push_back(network_objective(poly, smp.params));
  return path_csv(path, obj);
}

std::string grid_csv(const SliceGrid& g) {
  std::string s = "t,s,F\n";
  for (Eigen::Index i = 0; i < g.t.size(); ++i)
    for (Eigen::Index j = 0; j < g.s.size(); ++j)
      s += fmt17(g.t(i)) + "," + fmt17(g.s(j)) + "," + fmt17(g.values(i, j)) + "\n";
  return s;
}

Mat probe_grid(const Dataset& data, int per_axis) {
  const Eigen::Index d = data.x.cols();
  if (d > 2) return data.x;
  const Vec lo = data.x.colwise().minCoeff().transpose().array() - 1.0;
  const Vec hi = data.x.colwise().maxCoeff().transpose().array() + 1.0;
  if (d == 1) {
    Mat P(per_axis, 1);
    P.col(0) = Vec::LinSpaced(per_axis, lo(0), hi(0));
    return P;
  }
  const int k = std::max(2, per_axis / 4);
  const Vec a = Vec::LinSpaced(k, lo(0), hi(0)), b = Vec::LinSpaced(k, lo(1), hi(1));
  Mat P(k * k, 2);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) P.row(i * k + j) << a(i), b(j);
  return P;
}

std::string probes_csv(const Mat& probes) {
  std::string s = "probe";
  for (Eigen::Index k = 0; k < probes.cols(); ++k) s += ",x" + std::to_string(k + 1);
  s += "\n";
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    s += std::to_string(i);
    for (Eigen::Index k = 0; k < probes.cols(); ++k) s += "," + fmt17(probes(i, k));
    s += "\n";
  }
  return s;
}

std::string family_csv(const Dataset& data, const OptimalPolytope& poly, const InterpolatorFamily& fam,
                       const Mat& probes, int samples) {
  std::string s = "member,t,objective,residual";
  for (int k = 0; k < poly.size(); ++k) s += ",c" + std::to_string(k + 1);
  for (Eigen::Index k = 0; k < probes.rows(); ++k) s += ",f" + std::to_string(k + 1);
  s += "\n";
  auto row = [&](int idx, double t, const Vec& c) {
    s += std::to_string(idx) + "," + fmt17(t) + "," + fmt17(poly.value_of(c)) + "," + fmt17(poly.residual_of(c));
    for (Eigen::Index k = 0; k < c.size(); ++k) s += "," + fmt17(c(k));
    const Vec f = eval_model(psi(poly, c, poly.size()), data.has_bias, probes);
    for (Eigen::Index k = 0; k < f.size(); ++k) s += "," + fmt17(f(k));
    s += "\n";
  };
  if (fam.dimension == 1 && samples > 1) {
    for (int i = 0; i < samples; ++i) {
      const double t = fam.t_lo + (fam.t_hi - fam.t_lo) * i / (samples - 1);
      row(i, t, fam.point(t));
    }
  } else {
    // Zero- or higher-dimensional families: one row per vertex, t left at zero.
    for (size_t i = 0; i < fam.vertices.size(); ++i) row(static_cast<int>(i), 0.0, fam.vertices[i]);
  }
  return s;
}

std::string trace_csv(const GDTrace& tr) {
  std::string s = "step,cost\n";
  for (const auto& [step, v] : tr.objective) s += std::to_string(step) + "," + fmt17(v) + "\n";
  return s;
}

}  // namespace cvxrelu
