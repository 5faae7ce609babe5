#include "grw/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#ifndef GRW_VERSION
#define GRW_VERSION "0.0.0"
#endif

namespace grw::io {

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

json to_json(const CollapseParams& cp) {
  return {{"lambda", cp.lambda}, {"r_c", cp.r_c}, {"alpha", cp.alpha()}, {"mass_proportional", cp.mass_proportional}};
}

json to_json(const WavepacketParams& wp) {
  return {{"mass", wp.mass}, {"dq0", wp.dq0}, {"q0", wp.q0}, {"p0", wp.p0}, {"n_particles", wp.n_particles}};
}

json to_json(const UnitSystem& units) {
  return {{"mode", units.mode == UnitMode::si ? "si" : "natural"}, {"hbar", units.hbar},
          {"description", units.description}};
}

json to_json(const MomentSet<double>& m) {
  return {{"time", m.time}, {"mean_q", m.mean_q}, {"mean_q2", m.mean_q2}, {"mean_p", m.mean_p},
          {"mean_p2", m.mean_p2}, {"mean_qp", m.mean_qp_sym}};
}

json metadata(std::string_view command) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return {{"program", "grw_lab"}, {"version", GRW_VERSION}, {"command", command}, {"timestamp", stamp}};
}

void write_ensemble_csv(std::ostream& out, const EnsembleStats& stats) {
  out << "time,mean_q,se_q,mean_q2,se_q2,mean_p2,se_p2,mean_qp,se_qp\n";
  for (const auto& r : stats.rows) {
    out << format_double(r.time) << ',' << format_double(r.q.mean) << ',' << format_double(r.q.se) << ','
        << format_double(r.q2.mean) << ',' << format_double(r.q2.se) << ',' << format_double(r.p2.mean) << ','
        << format_double(r.p2.se) << ',' << format_double(r.qp.mean) << ',' << format_double(r.qp.se) << '\n';
  }
}

json ensemble_json(const EnsembleStats& stats) {
  json rows = json::array();
  auto est = [](const MomentEstimate& e) { return json{{"mean", e.mean}, {"se", e.se}}; };
  for (const auto& r : stats.rows) {
    rows.push_back({{"time", r.time}, {"q", est(r.q)}, {"q2", est(r.q2)}, {"p", est(r.p)}, {"p2", est(r.p2)},
                    {"qp", est(r.qp)}});
  }
  return {{"n_traj", stats.n_traj}, {"seed", stats.seed}, {"rows", rows}};
}

void write_spread_csv(std::ostream& out, const SpreadCurve<double>& curve) {
  out << "time,width,initial,correlation,quantum,collapse\n";
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    const auto& t = curve.terms[i];
    out << format_double(curve.times[i]) << ',' << format_double(curve.widths[i]) << ',' << format_double(t.initial)
        << ',' << format_double(t.correlation) << ',' << format_double(t.quantum) << ',' << format_double(t.collapse)
        << '\n';
  }
}

void write_moments_csv(std::ostream& out, const std::vector<MomentSet<double>>& rows) {
  out << "time,mean_q,mean_q2,mean_p,mean_p2,mean_qp\n";
  for (const auto& m : rows) {
    out << format_double(m.time) << ',' << format_double(m.mean_q) << ',' << format_double(m.mean_q2) << ','
        << format_double(m.mean_p) << ',' << format_double(m.mean_p2) << ',' << format_double(m.mean_qp_sym) << '\n';
  }
}

void write_scan_csv(std::ostream& out, const ScanResult& scan) {
  out << "lambda,r_c,cqr,phase\n";
  for (const auto& p : scan.points) {
    out << format_double(p.lambda) << ',' << format_double(p.r_c) << ',' << format_double(p.cqr) << ','
        << to_string(p.phase) << '\n';
  }
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_field(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad number '" + std::string(s) + "'", line);
  return v;
}

}  // namespace

std::vector<ScanPoint> read_scan_csv(std::istream& in) {
  std::vector<ScanPoint> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "lambda,r_c,cqr,phase") throw ParseError("unexpected scan header", line_no);
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw ParseError("expected 4 columns", line_no);
    try {
      out.push_back({parse_field(f[0], line_no), parse_field(f[1], line_no), parse_field(f[2], line_no),
                     parse_phase(f[3])});
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve, std::string_view value_column) {
  out << "r_c," << value_column << '\n';
  for (const auto& p : curve) out << format_double(p.r_c) << ',' << format_double(p.lambda) << '\n';
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 8);
  auto bits = std::bit_cast<std::uint64_t>(value);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ParseError("truncated grid snapshot", 0);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_grid_binary(std::ostream& out, const DensityGrid<double>::Matrix& rho) {
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(rho.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(rho.cols()));
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j) {
      put_le<double>(out, rho(i, j).real());
      put_le<double>(out, rho(i, j).imag());
    }
  }
}

DensityGrid<double>::Matrix read_grid_binary(std::istream& in) {
  const auto rows = get_le<std::uint64_t>(in);
  const auto cols = get_le<std::uint64_t>(in);
  if (rows > (1u << 16) || cols > (1u << 16)) throw ParseError("implausible grid shape", 0);
  DensityGrid<double>::Matrix rho(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j) {
      const double re = get_le<double>(in);
      const double im = get_le<double>(in);
      rho(i, j) = {re, im};
    }
  }
  return rho;
}

void write_grid_magnitude_csv(std::ostream& out, const DensityGrid<double>& grid) {
  out << "q";
  for (Eigen::Index j = 0; j < grid.size(); ++j) out << ',' << format_double(grid.position(j));
  out << '\n';
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    out << format_double(grid.position(i));
    for (Eigen::Index j = 0; j < grid.size(); ++j) out << ',' << format_double(std::abs(grid.rho(i, j)));
    out << '\n';
  }
}

json evolution_log_entry(const DensityGrid<double>& grid) {
  return {{"time", grid.time}, {"trace", grid.trace()}, {"purity", grid.purity()},
          {"max_off_diagonal", grid.max_off_diagonal()}};
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kWidth = 720, kHeight = 520;
constexpr double kLeft = 90, kRight = 30, kTop = 50, kBottom = 70;

struct Mapper {
  double lo_x, hi_x, lo_y, hi_y;
  bool log_x, log_y;

  double tx(double x) const { return log_x ? std::log10(x) : x; }
  double ty(double y) const { return log_y ? std::log10(y) : y; }
  double px(double x) const { return kLeft + (tx(x) - lo_x) / (hi_x - lo_x) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (ty(y) - lo_y) / (hi_y - lo_y) * (kHeight - kTop - kBottom); }
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

void pad_range(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    lo -= d;
    hi += d;
  }
}

void draw_frame(std::ostringstream& svg, const Mapper& m, const PlotAxes& axes) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kTop, y1 = kHeight - kBottom;
  svg << "<rect x='" << x0 << "' y='" << y0 << "' width='" << x1 - x0 << "' height='" << y1 - y0
      << "' fill='none' stroke='black'/>\n";
  auto ticks = [](double lo, double hi, bool log) {
    std::vector<double> t;
    if (log) {
      for (double e = std::ceil(lo); e <= std::floor(hi) + 1e-9; e += 1.0) t.push_back(e);
      if (t.size() > 12) {
        std::vector<double> thin;
        const auto stride = static_cast<std::size_t>(std::ceil(t.size() / 10.0));
        for (std::size_t i = 0; i < t.size(); i += stride) thin.push_back(t[i]);
        t = thin;
      }
    } else {
      for (int i = 0; i <= 5; ++i) t.push_back(lo + (hi - lo) * i / 5.0);
    }
    return t;
  };
  for (double t : ticks(m.lo_x, m.hi_x, m.log_x)) {
    const double x = kLeft + (t - m.lo_x) / (m.hi_x - m.lo_x) * (x1 - x0);
    svg << "<line x1='" << x << "' y1='" << y1 << "' x2='" << x << "' y2='" << y1 + 5 << "' stroke='black'/>\n";
    svg << "<text x='" << x << "' y='" << y1 + 20 << "' font-size='12' text-anchor='middle'>"
        << (m.log_x ? "1e" + num(t) : num(t)) << "</text>\n";
  }
  for (double t : ticks(m.lo_y, m.hi_y, m.log_y)) {
    const double y = y1 - (t - m.lo_y) / (m.hi_y - m.lo_y) * (y1 - y0);
    svg << "<line x1='" << x0 - 5 << "' y1='" << y << "' x2='" << x0 << "' y2='" << y << "' stroke='black'/>\n";
    svg << "<text x='" << x0 - 8 << "' y='" << y + 4 << "' font-size='12' text-anchor='end'>"
        << (m.log_y ? "1e" + num(t) : num(t)) << "</text>\n";
  }
  svg << "<text x='" << kWidth / 2 << "' y='" << kTop - 18 << "' font-size='16' text-anchor='middle'>"
      << escape(axes.title) << "</text>\n";
  svg << "<text x='" << (x0 + x1) / 2 << "' y='" << kHeight - 20 << "' font-size='14' text-anchor='middle'>"
      << escape(axes.x_label) << "</text>\n";
  svg << "<text x='20' y='" << (y0 + y1) / 2 << "' font-size='14' text-anchor='middle' transform='rotate(-90 20 "
      << (y0 + y1) / 2 << ")'>" << escape(axes.y_label) << "</text>\n";
}

void draw_series(std::ostringstream& svg, const Mapper& m, const std::vector<PlotSeries>& series) {
  double legend_y = kTop + 18;
  for (const auto& s : series) {
    svg << "<polyline fill='none' stroke='" << s.color << "' stroke-width='2'"
        << (s.dashed ? " stroke-dasharray='6,4'" : "") << " points='";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if ((m.log_x && !(s.x[i] > 0)) || (m.log_y && !(s.y[i] > 0))) continue;
      svg << num(m.px(s.x[i])) << ',' << num(m.py(s.y[i])) << ' ';
    }
    svg << "'/>\n";
    if (!s.label.empty()) {
      const double lx = kWidth - kRight - 190;
      svg << "<line x1='" << lx << "' y1='" << legend_y - 4 << "' x2='" << lx + 24 << "' y2='" << legend_y - 4
          << "' stroke='" << s.color << "' stroke-width='2'" << (s.dashed ? " stroke-dasharray='6,4'" : "")
          << "/>\n<text x='" << lx + 30 << "' y='" << legend_y << "' font-size='12'>" << escape(s.label)
          << "</text>\n";
      legend_y += 16;
    }
  }
}

std::string header() {
  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight << "' viewBox='0 0 "
    << kWidth << ' ' << kHeight << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  return s.str();
}

// Piecewise-linear approximation of the viridis colormap, v in [0, 1].
std::string colormap(double v) {
  static const double stops[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  v = std::clamp(v, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(v));
  const double f = v - i;
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
  return buf;
}

}  // namespace

std::string svg_line_plot(const std::vector<PlotSeries>& series, const PlotAxes& axes) {
  double lx = std::numeric_limits<double>::infinity(), hx = -lx, ly = lx, hy = -lx;
  Mapper probe{0, 1, 0, 1, axes.log_x, axes.log_y};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if ((axes.log_x && !(s.x[i] > 0)) || (axes.log_y && !(s.y[i] > 0))) continue;
      lx = std::min(lx, probe.tx(s.x[i]));
      hx = std::max(hx, probe.tx(s.x[i]));
      ly = std::min(ly, probe.ty(s.y[i]));
      hy = std::max(hy, probe.ty(s.y[i]));
    }
  }
  if (!std::isfinite(lx)) lx = 0, hx = 1, ly = 0, hy = 1;
  pad_range(lx, hx);
  pad_range(ly, hy);
  const Mapper m{lx, hx, ly, hy, axes.log_x, axes.log_y};
  std::ostringstream svg;
  svg << header();
  draw_frame(svg, m, axes);
  draw_series(svg, m, series);
  svg << "</svg>\n";
  return svg.str();
}

std::string svg_scan_heatmap(const ScanResult& scan, const std::vector<PlotSeries>& overlays) {
  std::vector<double> lambdas;
  for (double l : scan.lambdas) {
    if (l > 0) lambdas.push_back(l);
  }
  if (lambdas.size() < 2) throw DomainError("heatmap needs at least two positive lambda samples");
  const Mapper m{std::log10(scan.r_cs.front()), std::log10(scan.r_cs.back()), std::log10(lambdas.front()),
                 std::log10(lambdas.back()), true, true};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : scan.points) {
    if (p.cqr > 0) {
      lo = std::min(lo, std::log10(p.cqr));
      hi = std::max(hi, std::log10(p.cqr));
    }
  }
  pad_range(lo, hi);

  std::ostringstream svg;
  svg << header();
  const std::size_t nr = scan.r_cs.size();
  for (std::size_t i = 0; i < scan.lambdas.size(); ++i) {
    if (!(scan.lambdas[i] > 0)) continue;
    // Cell edges halfway (in log space) between neighbouring samples.
    auto edge = [](const std::vector<double>& v, std::size_t k, bool upper) {
      if (upper) return k + 1 < v.size() ? std::sqrt(v[k] * v[k + 1]) : v[k];
      return k > 0 && v[k - 1] > 0 ? std::sqrt(v[k] * v[k - 1]) : v[k];
    };
    const double y_top = m.py(edge(scan.lambdas, i, true));
    const double y_bot = m.py(edge(scan.lambdas, i, false));
    for (std::size_t j = 0; j < nr; ++j) {
      const double x_l = m.px(edge(scan.r_cs, j, false));
      const double x_r = m.px(edge(scan.r_cs, j, true));
      const auto& p = scan.at(i, j);
      const double v = p.cqr > 0 ? (std::log10(p.cqr) - lo) / (hi - lo) : 0.0;
      svg << "<rect x='" << num(x_l) << "' y='" << num(y_top) << "' width='" << num(x_r - x_l + 0.5)
          << "' height='" << num(y_bot - y_top + 0.5) << "' fill='" << colormap(v) << "'/>\n";
    }
  }
  draw_frame(svg, m,
             PlotAxes{"log10 CQR over the (r_c, lambda) plane, t = " + num(scan.t) + " s", "r_c [m]",
                      "lambda [1/s]", true, true});
  std::vector<PlotSeries> lines = overlays;
  PlotSeries coex{"coexistence (CQR = 1)", {}, {}, "#d62728", false};
  for (const auto& c : scan.coexistence) {
    coex.x.push_back(c.r_c);
    coex.y.push_back(c.lambda);
  }
  lines.insert(lines.begin(), coex);
  draw_series(svg, m, lines);
  svg << "</svg>\n";
  return svg.str();
}

std::string svg_matrix_heatmap(const Eigen::MatrixXd& values, double extent, const std::string& title) {
  const Mapper m{-extent, extent, -extent, extent, false, false};
  const double vmax = values.maxCoeff() > 0 ? values.maxCoeff() : 1.0;
  std::ostringstream svg;
  svg << header();
  const auto n = values.rows();
  const double cell_w = (kWidth - kLeft - kRight) / static_cast<double>(values.cols());
  const double cell_h = (kHeight - kTop - kBottom) / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double v = values(i, j) / vmax;
      if (v < 1e-3) continue;
      svg << "<rect x='" << num(kLeft + j * cell_w) << "' y='" << num(kHeight - kBottom - (i + 1) * cell_h)
          << "' width='" << num(cell_w + 0.3) << "' height='" << num(cell_h + 0.3) << "' fill='" << colormap(v)
          << "'/>\n";
    }
  }
  draw_frame(svg, m, PlotAxes{title, "q''", "q'", false, false});
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace grw::io
