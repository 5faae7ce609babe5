#include "grw/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "grw/master_equation.hpp"

namespace grw {

double InteractionRamp::operator()(double t) const {
  if (t <= t0) return 0.0;
  if (t >= t1) return 1.0;
  const double x = (t - t0) / (t1 - t0);
  switch (profile) {
    case RampProfile::linear:
      return x;
    case RampProfile::smoothstep:
      return x * x * (3.0 - 2.0 * x);
  }
  return x;
}

void InteractionRamp::validate() const {
  if (!(t1 > t0)) throw DomainError("interaction ramp needs t1 > t0");
}

void MeasurementSetup::validate() const {
  if (outcomes.empty()) throw DomainError("measurement setup has no outcomes");
  double total = 0.0;
  for (const auto& o : outcomes) total += std::norm(o.amplitude);
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("outcome amplitudes are not normalized: sum |c_n|^2 = " + std::to_string(total));
  }
  pointer.validate();
  ramp.validate();
}

BranchState entangle(const MeasurementSetup& setup, const UnitSystem& units, double t) {
  setup.validate();
  if (!(t >= 0.0)) throw DomainError("entangle: t must be >= 0");
  // Displacement commutes with the free pointer Hamiltonian: evolve once, shift per branch.
  const auto free = free_evolve(GaussianState<double>::minimum_uncertainty(setup.pointer), t, setup.pointer.mass,
                                units.hbar);
  const double beta = setup.ramp(t);
  BranchState out;
  out.time = t;
  for (const auto& o : setup.outcomes) {
    out.branches.push_back({displaced(free, beta * o.pointer_shift), o.amplitude, std::norm(o.amplitude)});
  }
  return out;
}

std::complex<double> pointer_overlap(const BranchState& branches, std::size_t n, std::size_t m,
                                     const UnitSystem& units) {
  if (n >= branches.branches.size() || m >= branches.branches.size()) {
    throw DomainError("branch index out of range");
  }
  if (n == m) return {1.0, 0.0};
  return overlap(branches.branches[n].pointer, branches.branches[m].pointer, units.hbar);
}

Eigen::MatrixXcd reduced_density(const BranchState& branches, ReductionMode mode, const UnitSystem& units) {
  const auto size = static_cast<Eigen::Index>(branches.branches.size());
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(size, size);
  for (Eigen::Index n = 0; n < size; ++n) {
    const auto& bn = branches.branches[n];
    rho(n, n) = bn.weight;
    if (mode == ReductionMode::post) continue;
    for (Eigen::Index m = 0; m < size; ++m) {
      if (m == n) continue;
      const auto& bm = branches.branches[m];
      rho(n, m) = bn.amplitude * std::conj(bm.amplitude) * pointer_overlap(branches, m, n, units);
    }
  }
  return rho;
}

namespace {

double final_separation(const MeasurementSetup& setup, std::size_t n, std::size_t m) {
  if (n >= setup.outcomes.size() || m >= setup.outcomes.size()) throw DomainError("branch index out of range");
  return std::abs(setup.outcomes[n].pointer_shift - setup.outcomes[m].pointer_shift);
}

}  // namespace

double pointer_diagonalization_time(const MeasurementSetup& setup, const CollapseParams& cp, int n_particles,
                                    std::size_t n, std::size_t m) {
  cp.validate();
  if (n_particles < 1) throw DomainError("pointer particle count must be >= 1");
  const double rate = expected_decay_rate(cp, n_particles, final_separation(setup, n, m));
  if (rate == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / rate;
}

DiagonalizationCheck measure_diagonalization_time(const MeasurementSetup& setup, const CollapseParams& cp,
                                                  int n_particles, const UnitSystem& units, std::size_t n,
                                                  std::size_t m, const GridCheckOptions& options) {
  setup.validate();
  DiagonalizationCheck check;
  check.predicted = pointer_diagonalization_time(setup, cp, n_particles, n, m);
  check.separation = final_separation(setup, n, m);
  if (!std::isfinite(check.predicted)) {
    check.measured = check.predicted;
    return check;
  }
  if (options.samples < 10) throw DomainError("need at least 10 samples");

  // Pointer pair at the end of the ramp, re-centered on its midpoint.
  const auto branches = entangle(setup, units, setup.ramp.t1);
  auto a = branches.branches[n].pointer;
  auto b = branches.branches[m].pointer;
  const double mid = (a.center + b.center) / 2.0;
  a.center -= mid;
  b.center -= mid;
  a.time = b.time = 0.0;

  WavepacketParams pointer = setup.pointer;
  pointer.n_particles = n_particles;
  const double span = options.e_foldings * check.predicted;
  const double spread = schrodinger_width(WavepacketParams{pointer.mass, std::sqrt(a.var_q())}, units.hbar, span);
  const double half_width = 2.0 * (check.separation / 2.0 + 9.0 * spread);

  const auto points = options.grid_points;
  const double spacing = 2.0 * half_width / static_cast<double>(points);
  std::vector<std::complex<double>> psi(points);
  for (Eigen::Index i = 0; i < points; ++i) {
    const double q = -half_width + static_cast<double>(i) * spacing;
    psi[i] = a.amplitude(q, units.hbar) + b.amplitude(q, units.hbar);
  }
  const auto grid = render_wavefunction(psi, half_width);

  const double dt_limit = max_stable_dt(grid, pointer.mass, units.hbar);
  const long per_sample = std::max(1L, static_cast<long>(std::ceil(span / options.samples / dt_limit)));
  const double dt = span / (static_cast<double>(options.samples) * per_sample);
  const auto series =
      evolve_series(grid, pointer, cp, units.hbar, dt, per_sample * options.samples, per_sample);
  const auto fit = decoherence_profile(series, std::vector<double>{check.separation});
  check.separation = fit.front().separation;
  check.predicted = 1.0 / expected_decay_rate(cp, n_particles, check.separation);
  check.measured = fit.front().rate > 0 ? 1.0 / fit.front().rate : std::numeric_limits<double>::infinity();
  check.relative_error = std::abs(check.measured - check.predicted) / check.predicted;
  return check;
}

MeasurementSetup setup_from_config(const KeyValueConfig& cfg) {
  MeasurementSetup setup;
  for (const auto& e : cfg.get_all("outcome")) {
    std::istringstream in(e.value);
    Outcome o;
    double re = 0.0, im = 0.0;
    if (!(in >> o.eigenvalue >> re >> im >> o.pointer_shift)) {
      throw ParseError("outcome expects '<eigenvalue> <amp_re> <amp_im> <f_value>'", e.line);
    }
    std::string rest;
    if (in >> rest) throw ParseError("trailing text in outcome line", e.line);
    o.amplitude = {re, im};
    setup.outcomes.push_back(o);
  }
  if (setup.outcomes.empty()) {
    // Two equally weighted outcomes, pointer shifts one localization length apart.
    const double c = 1.0 / std::sqrt(2.0);
    setup.outcomes = {{+1.0, {c, 0.0}, 0.5}, {-1.0, {c, 0.0}, -0.5}};
  }
  setup.pointer.mass = cfg.get_double("pointer_mass", 1.0e3);
  setup.pointer.dq0 = cfg.get_double("pointer_dq0", 0.1);
  setup.ramp.t0 = cfg.get_double("t0", 0.0);
  setup.ramp.t1 = cfg.get_double("t1", 1.0);
  const auto ramp = cfg.get_string("ramp", "smoothstep");
  if (ramp == "smoothstep") {
    setup.ramp.profile = RampProfile::smoothstep;
  } else if (ramp == "linear") {
    setup.ramp.profile = RampProfile::linear;
  } else {
    throw UsageError("unknown ramp profile '" + ramp + "'");
  }
  setup.validate();
  return setup;
}

}  // namespace grw
