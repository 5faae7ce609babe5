#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "grw/core_model.hpp"

namespace grw {

enum class Phase { strongly_quantum, quasi, strongly_classical };

std::string_view to_string(Phase phase);
Phase parse_phase(std::string_view text);

struct PhaseThresholds {
  double low = 1e-2;
  double high = 1e2;
  void validate() const;
};

Phase classify(double cqr_value, const PhaseThresholds& thresholds);

struct ScanPoint {
  double lambda = 0.0;
  double r_c = 0.0;
  double cqr = 0.0;
  Phase phase = Phase::strongly_quantum;

  bool operator==(const ScanPoint&) const = default;
};

/// One sample of a lambda(r_c) curve.
struct CurvePoint {
  double r_c = 0.0;
  double lambda = 0.0;
};

struct ScanResult {
  std::vector<double> lambdas;
  std::vector<double> r_cs;
  std::vector<ScanPoint> points;  // lambda-major: points[i * r_cs.size() + j]
  std::vector<CurvePoint> coexistence;
  double t = 0.0;
  double dq0_sq = 0.0;
  PhaseThresholds thresholds;

  const ScanPoint& at(std::size_t i_lambda, std::size_t j_rc) const { return points[i_lambda * r_cs.size() + j_rc]; }
};

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_axis(double lo, double hi, std::size_t n);

ScanResult scan_plane(const std::vector<double>& lambdas, const std::vector<double>& r_cs, const WavepacketParams& wp,
                      double t, const PhaseThresholds& thresholds = {});

enum class Convention { plain, mass_proportional };

std::string_view to_string(Convention c);
Convention parse_convention(std::string_view text);

/// m_species / m_nucleon for hydrogen.
inline constexpr double kHydrogenSpeciesFactor = 2.0;

struct BoundResult {
  double lambda_max = 0.0;
  Convention convention = Convention::plain;
  double t_used = 0.0;
  double r_c = 0.0;
  double dq0_sq = 0.0;
  double species_factor = 1.0;
};

BoundResult bound_from_cqr(const WavepacketParams& wp, double r_c, double t, Convention convention,
                           double species_factor = kHydrogenSpeciesFactor);

/// Time at which the collapse term overtakes the quantum term. cp.lambda is
/// read in the given convention.
double dominance_time(const WavepacketParams& wp, const CollapseParams& cp, Convention convention,
                      double species_factor = kHydrogenSpeciesFactor);

struct BoundCurve {
  std::string label;
  std::vector<CurvePoint> points;  // sorted by r_c
};

/// Two-column CSV (r_c, lambda). '#' comments and one optional header line are allowed.
BoundCurve read_bound_curve(std::istream& in, std::string label);
BoundCurve read_bound_curve(const std::filesystem::path& path);

struct OverlayResult {
  ScanResult scan;
  std::vector<BoundCurve> curves;
  std::vector<CurvePoint> envelope;  // pointwise minimum at the scan's r_c samples
};

OverlayResult overlay_bounds(ScanResult scan, std::vector<BoundCurve> curves);

/// log-log interpolation; NaN outside the curve's r_c range.
double interpolate_curve(const BoundCurve& curve, double r_c);

}  // namespace grw
