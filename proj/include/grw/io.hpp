#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "grw/analytic.hpp"
#include "grw/core_model.hpp"
#include "grw/master_equation.hpp"
#include "grw/scan.hpp"
#include "grw/trajectories.hpp"

namespace grw::io {

using nlohmann::json;

/// Shortest text that round-trips the double exactly.
std::string format_double(double x);

json to_json(const CollapseParams& cp);
json to_json(const WavepacketParams& wp);
json to_json(const UnitSystem& units);
json to_json(const MomentSet<double>& m);

/// version, command and UTC timestamp.
json metadata(std::string_view command);

// Ensemble: time,mean_q,se_q,mean_q2,se_q2,mean_p2,se_p2,mean_qp,se_qp
void write_ensemble_csv(std::ostream& out, const EnsembleStats& stats);
json ensemble_json(const EnsembleStats& stats);

// Spread: time,width,initial,correlation,quantum,collapse
void write_spread_csv(std::ostream& out, const SpreadCurve<double>& curve);

// Moments: time,mean_q,mean_q2,mean_p,mean_p2,mean_qp
void write_moments_csv(std::ostream& out, const std::vector<MomentSet<double>>& rows);

// Scan: lambda,r_c,cqr,phase
void write_scan_csv(std::ostream& out, const ScanResult& scan);
std::vector<ScanPoint> read_scan_csv(std::istream& in);

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve, std::string_view value_column);

/// u64 rows, u64 cols, then rows*cols (re, im) pairs in row-major order; all little-endian.
void write_grid_binary(std::ostream& out, const DensityGrid<double>::Matrix& rho);
DensityGrid<double>::Matrix read_grid_binary(std::istream& in);

/// |rho| as a CSV matrix with a header row of positions.
void write_grid_magnitude_csv(std::ostream& out, const DensityGrid<double>& grid);

/// One JSON-lines record: time, trace, purity, max_off_diagonal.
json evolution_log_entry(const DensityGrid<double>& grid);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotAxes {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

std::string svg_line_plot(const std::vector<PlotSeries>& series, const PlotAxes& axes);

/// log10(cqr) heatmap on log-log axes with optional curves drawn on top.
std::string svg_scan_heatmap(const ScanResult& scan, const std::vector<PlotSeries>& overlays);

/// Linear-axis heatmap of a real matrix (e.g. |rho|).
std::string svg_matrix_heatmap(const Eigen::MatrixXd& values, double extent, const std::string& title);

}  // namespace grw::io
