#pragma once

#include <string>
#include <vector>

#include "cvxrelu/interpolators.hpp"
#include "cvxrelu/landscape.hpp"

namespace cvxrelu {

inline constexpr int REPORT_SCHEMA_VERSION = 1;
inline constexpr const char* TOOL_VERSION = "0.1.0";

// Dataset CSV with header x1,...,xd,y.
Dataset parse_dataset_csv(const std::string& text, bool bias, bool skip, double beta, Mode mode);
Dataset load_dataset_csv(const std::string& path, bool bias, bool skip, double beta, Mode mode);
std::string dataset_csv(const Dataset& data);

// Decimal with 17 significant digits.
std::string fmt17(double v);

struct ReportTiming {
  bool enabled = false;
  double analyze_seconds = 0.0;
  double widths_seconds = 0.0;
};

// Analysis report as JSON text; widths may be null.
std::string analysis_report_json(const Dataset& data, const Analysis& an, const RegimeReport* widths,
                                 const ReportTiming& timing = {});

struct LoadedReport {
  int schema_version = 0;
  double objective = 0.0;
  Vec y_star;
  Vec nu;
  int m_star = -1;
  int M_star = -1;
};

// Reads the fields needed for revalidation; unknown fields are ignored.
LoadedReport parse_report(const std::string& json_text);

struct CertificateCheck {
  bool pass = false;
  double max_ratio = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  std::string reason;
};

// Recomputes the dual bound of a stored certificate against the dataset.
CertificateCheck revalidate_certificate(const Dataset& data, const LoadedReport& rep);

// path.csv: t, flattened parameters, objective.
std::string path_csv(const OptimalPolytope& poly, const ParameterPath& path);
std::string path_csv(const ParameterPath& path, const std::vector<double>& objectives);
// grid.csv: t, s, F.
std::string grid_csv(const SliceGrid& g);
// Raw probe inputs around the data: a line for one input, a square grid for two, the samples otherwise.
Mat probe_grid(const Dataset& data, int per_axis = 41);
// probes.csv: probe, x1..xd.
std::string probes_csv(const Mat& probes);
// family.csv: member, t, objective, residual, c_1..c_K, f_1..f_P (network values at the probes).
std::string family_csv(const Dataset& data, const OptimalPolytope& poly, const InterpolatorFamily& fam,
                       const Mat& probes, int samples = 20);
// trace.csv: step, cost.
std::string trace_csv(const GDTrace& tr);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace cvxrelu
