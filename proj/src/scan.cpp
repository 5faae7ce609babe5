#include "grw/scan.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>

#include "grw/analytic.hpp"

namespace grw {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::strongly_quantum:
      return "strongly_quantum";
    case Phase::quasi:
      return "quasi";
    case Phase::strongly_classical:
      return "strongly_classical";
  }
  return "quasi";
}

Phase parse_phase(std::string_view text) {
  if (text == "strongly_quantum") return Phase::strongly_quantum;
  if (text == "quasi") return Phase::quasi;
  if (text == "strongly_classical") return Phase::strongly_classical;
  throw DomainError("unknown phase '" + std::string(text) + "'");
}

void PhaseThresholds::validate() const {
  if (!(low > 0.0) || !(high >= low)) throw DomainError("phase thresholds need 0 < low <= high");
}

Phase classify(double cqr_value, const PhaseThresholds& thresholds) {
  if (cqr_value < thresholds.low) return Phase::strongly_quantum;
  if (cqr_value > thresholds.high) return Phase::strongly_classical;
  return Phase::quasi;
}

std::vector<double> log_axis(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo)) throw DomainError("log axis needs 0 < lo < hi");
  if (n < 2) throw DomainError("log axis needs at least 2 points");
  std::vector<double> out(n);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

ScanResult scan_plane(const std::vector<double>& lambdas, const std::vector<double>& r_cs, const WavepacketParams& wp,
                      double t, const PhaseThresholds& thresholds) {
  wp.validate();
  thresholds.validate();
  if (lambdas.size() < 2 || r_cs.size() < 2) throw DomainError("scan needs at least 2 samples per axis");
  if (!(t > 0.0)) throw DomainError("scan time must be positive");
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw DomainError("lambda samples must be >= 0");
  }
  for (double r : r_cs) {
    if (!(r > 0.0)) throw DomainError("r_c samples must be > 0");
  }

  ScanResult out;
  out.lambdas = lambdas;
  out.r_cs = r_cs;
  out.t = t;
  out.dq0_sq = wp.dq0_sq();
  out.thresholds = thresholds;
  out.points.reserve(lambdas.size() * r_cs.size());
  for (double lambda : lambdas) {
    for (double r_c : r_cs) {
      const double value = cqr(wp, CollapseParams{lambda, r_c, false}, t);
      out.points.push_back({lambda, r_c, value, classify(value, thresholds)});
    }
  }
  for (double r_c : r_cs) {
    out.coexistence.push_back({r_c, coexistence_lambda(r_c, wp.dq0_sq(), t) / wp.n_particles});
  }
  return out;
}

std::string_view to_string(Convention c) {
  return c == Convention::plain ? "plain" : "mass_proportional";
}

Convention parse_convention(std::string_view text) {
  if (text == "plain") return Convention::plain;
  if (text == "mass_proportional") return Convention::mass_proportional;
  throw DomainError("unknown convention '" + std::string(text) + "' (expected plain or mass_proportional)");
}

BoundResult bound_from_cqr(const WavepacketParams& wp, double r_c, double t, Convention convention,
                           double species_factor) {
  wp.validate();
  if (!(species_factor > 0.0)) throw DomainError("species factor must be positive");
  BoundResult out;
  out.convention = convention;
  out.t_used = t;
  out.r_c = r_c;
  out.dq0_sq = wp.dq0_sq();
  out.species_factor = convention == Convention::mass_proportional ? species_factor : 1.0;
  out.lambda_max = coexistence_lambda(r_c, wp.dq0_sq(), t) / wp.n_particles * out.species_factor;
  return out;
}

double dominance_time(const WavepacketParams& wp, const CollapseParams& cp, Convention convention,
                      double species_factor) {
  wp.validate();
  cp.validate();
  if (!(species_factor > 0.0)) throw DomainError("species factor must be positive");
  if (cp.lambda == 0.0) return std::numeric_limits<double>::infinity();
  const double lambda = convention == Convention::mass_proportional ? cp.lambda / species_factor : cp.lambda;
  // cqr is linear in t, so t* = 1 / cqr(t = 1).
  return 1.0 / cqr(wp, CollapseParams{lambda, cp.r_c, false}, 1.0);
}

namespace {

bool parse_number(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

BoundCurve read_bound_curve(std::istream& in, std::string label) {
  BoundCurve curve{std::move(label), {}};
  std::string line;
  std::size_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    if (view.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto comma = view.find(',');
    if (comma == std::string_view::npos) throw ParseError("expected two comma-separated columns", line_no);
    double r_c = 0.0, lambda = 0.0;
    const bool ok = parse_number(view.substr(0, comma), r_c) && parse_number(view.substr(comma + 1), lambda);
    if (!ok && header_allowed) {
      header_allowed = false;
      continue;
    }
    header_allowed = false;
    if (!ok) throw ParseError("malformed number", line_no);
    if (!(r_c > 0.0) || !(lambda > 0.0)) throw ParseError("r_c and lambda must be positive", line_no);
    curve.points.push_back({r_c, lambda});
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const CurvePoint& a, const CurvePoint& b) { return a.r_c < b.r_c; });
  return curve;
}

BoundCurve read_bound_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open curve file '" + path.string() + "'");
  return read_bound_curve(in, path.stem().string());
}

double interpolate_curve(const BoundCurve& curve, double r_c) {
  const auto& p = curve.points;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (p.empty() || r_c < p.front().r_c || r_c > p.back().r_c) return nan;
  if (p.size() == 1) return p.front().lambda;
  auto hi = std::lower_bound(p.begin(), p.end(), r_c, [](const CurvePoint& a, double x) { return a.r_c < x; });
  if (hi->r_c == r_c) return hi->lambda;
  auto lo = hi - 1;
  const double w = (std::log(r_c) - std::log(lo->r_c)) / (std::log(hi->r_c) - std::log(lo->r_c));
  return std::exp(std::log(lo->lambda) + w * (std::log(hi->lambda) - std::log(lo->lambda)));
}

OverlayResult overlay_bounds(ScanResult scan, std::vector<BoundCurve> curves) {
  OverlayResult out;
  out.envelope = scan.coexistence;
  for (auto& point : out.envelope) {
    for (const auto& c : curves) {
      const double v = interpolate_curve(c, point.r_c);
      if (!std::isnan(v)) point.lambda = std::min(point.lambda, v);
    }
  }
  out.scan = std::move(scan);
  out.curves = std::move(curves);
  return out;
}

}  // namespace grw
