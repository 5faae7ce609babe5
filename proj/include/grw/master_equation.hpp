#pragma once

// Position-representation density matrix under free motion plus GRW damping:
//
//   d rho(q', q'')/dt = (i hbar / 2m)(d^2/dq'^2 - d^2/dq''^2) rho
//                       - N lambda (1 - exp(-alpha (q' - q'')^2 / 4)) rho
//
// Strang splitting: half kinetic (spectral, per axis), full damping (exact,
// entrywise), half kinetic.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "grw/analytic.hpp"
#include "grw/core_model.hpp"
#include "grw/gaussian_state.hpp"

namespace grw {

/// rho(q_i, q_j) on the periodic grid q_i = -L + i * spacing, spacing = 2L/n.
template <typename Scalar = double>
struct DensityGrid {
  using Complex = std::complex<Scalar>;
  using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix rho;
  Scalar half_width{};
  Scalar spacing{};
  Scalar time{};

  Eigen::Index size() const { return rho.rows(); }
  Scalar position(Eigen::Index i) const { return -half_width + Scalar(i) * spacing; }

  RealVector positions() const {
    RealVector q(size());
    for (Eigen::Index i = 0; i < size(); ++i) q(i) = position(i);
    return q;
  }

  Scalar trace() const { return rho.diagonal().real().sum() * spacing; }
  Scalar purity() const { return rho.cwiseAbs2().sum() * spacing * spacing; }
  Scalar hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

  Scalar max_off_diagonal() const {
    Scalar best = 0;
    for (Eigen::Index j = 0; j < size(); ++j) {
      for (Eigen::Index i = 0; i < size(); ++i) {
        if (i != j) best = std::max(best, std::abs(rho(i, j)));
      }
    }
    return best;
  }
};

namespace detail {

/// Angular wavenumbers in FFT order.
template <typename Scalar>
std::vector<Scalar> grid_wavenumbers(Eigen::Index n, Scalar spacing) {
  std::vector<Scalar> k(n);
  const Scalar dk = Scalar(2) * std::numbers::pi_v<Scalar> / (Scalar(n) * spacing);
  for (Eigen::Index j = 0; j < n; ++j) k[j] = dk * Scalar(j < n / 2 ? j : j - n);
  return k;
}

/// Replaces each column by IFFT(multiplier .* FFT(column)).
template <typename Scalar>
void apply_spectral_columns(typename DensityGrid<Scalar>::Matrix& m,
                            const std::vector<std::complex<Scalar>>& multiplier) {
  using Complex = std::complex<Scalar>;
  Eigen::FFT<Scalar> fft;
  const Eigen::Index n = m.rows();
  std::vector<Complex> in(n), spectrum(n), out(n);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < n; ++r) in[r] = m(r, c);
    fft.fwd(spectrum, in);
    for (Eigen::Index r = 0; r < n; ++r) spectrum[r] *= multiplier[r];
    fft.inv(out, spectrum);
    for (Eigen::Index r = 0; r < n; ++r) m(r, c) = out[r];
  }
}

/// rho -> U rho U^dagger for U diagonal in momentum with the given phases.
template <typename Scalar>
void conjugate_by(typename DensityGrid<Scalar>::Matrix& rho, const std::vector<std::complex<Scalar>>& phases) {
  apply_spectral_columns<Scalar>(rho, phases);
  rho = rho.adjoint().eval();
  apply_spectral_columns<Scalar>(rho, phases);
  rho = rho.adjoint().eval();
}

template <typename Scalar>
void require_support(const std::vector<std::complex<Scalar>>& psi, Scalar half_width, Scalar spacing) {
  Scalar peak = 0;
  for (const auto& v : psi) peak = std::max(peak, std::abs(v));
  if (!(peak > 0)) throw DomainError("wavefunction vanishes on the grid");
  Scalar edge = 0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const Scalar q = -half_width + Scalar(i) * spacing;
    if (std::abs(q) >= half_width / 2) edge = std::max(edge, std::abs(psi[i]));
  }
  if (edge > Scalar(1e-6) * peak) {
    throw DomainError("domain too small: |psi| outside [-L/2, L/2] reaches " + std::to_string(double(edge / peak)) +
                      " of its maximum");
  }
}

}  // namespace detail

/// Outer product |psi><psi| from samples on the grid, normalized to unit trace.
template <typename Scalar>
DensityGrid<Scalar> render_wavefunction(std::vector<std::complex<Scalar>> psi, Scalar half_width,
                                        bool check_support = true) {
  const auto n = static_cast<Eigen::Index>(psi.size());
  if (n < 4) throw DomainError("grid must have at least 4 points");
  if (!(half_width > 0)) throw DomainError("half width must be positive");
  const Scalar spacing = Scalar(2) * half_width / Scalar(n);
  if (check_support) detail::require_support(psi, half_width, spacing);
  Scalar norm2 = 0;
  for (const auto& v : psi) norm2 += std::norm(v);
  const Scalar scale = Scalar(1) / std::sqrt(norm2 * spacing);
  Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = psi[i] * scale;
  return {v * v.adjoint(), half_width, spacing, Scalar(0)};
}

template <typename Scalar>
std::vector<std::complex<Scalar>> sample_state(const GaussianState<Scalar>& s, Scalar hbar, Scalar half_width,
                                               Eigen::Index n) {
  std::vector<std::complex<Scalar>> psi(n);
  const Scalar spacing = Scalar(2) * half_width / Scalar(n);
  for (Eigen::Index i = 0; i < n; ++i) psi[i] = s.amplitude(-half_width + Scalar(i) * spacing, hbar);
  return psi;
}

template <typename Scalar>
DensityGrid<Scalar> render_state(const GaussianState<Scalar>& s, Scalar hbar, Scalar half_width, Eigen::Index n) {
  if (!s.valid()) throw DomainError("state is not normalizable");
  auto grid = render_wavefunction(sample_state(s, hbar, half_width, n), half_width);
  grid.time = s.time;
  return grid;
}

/// Equal-weight mixture of the given pure states.
template <typename Scalar>
DensityGrid<Scalar> average_projector(const std::vector<GaussianState<Scalar>>& states, Scalar hbar,
                                      Scalar half_width, Eigen::Index n) {
  using Complex = std::complex<Scalar>;
  if (states.empty()) throw DomainError("no states to average");
  const Scalar spacing = Scalar(2) * half_width / Scalar(n);
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> columns(n, static_cast<Eigen::Index>(states.size()));
  for (std::size_t c = 0; c < states.size(); ++c) {
    auto psi = sample_state(states[c], hbar, half_width, n);
    detail::require_support(psi, half_width, spacing);
    Scalar norm2 = 0;
    for (const auto& v : psi) norm2 += std::norm(v);
    const Scalar scale = Scalar(1) / std::sqrt(norm2 * spacing);
    for (Eigen::Index i = 0; i < n; ++i) columns(i, static_cast<Eigen::Index>(c)) = psi[i] * scale;
  }
  DensityGrid<Scalar> out;
  out.rho = columns * columns.adjoint() / Scalar(states.size());
  out.half_width = half_width;
  out.spacing = spacing;
  out.time = states.front().time;
  return out;
}

/// Ensemble effect of a single hit: exp(-alpha s^2 / 4) at separation s.
template <typename Scalar>
Scalar hit_map_factor(Scalar separation, Scalar alpha) {
  return std::exp(-alpha * separation * separation / Scalar(4));
}

template <typename Scalar>
DensityGrid<Scalar> apply_hit_map(DensityGrid<Scalar> grid, const CollapseParams& cp) {
  const Scalar alpha = cp.alpha();
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      if (i != j) grid.rho(i, j) *= hit_map_factor(grid.position(i) - grid.position(j), alpha);
    }
  }
  return grid;
}

/// Asymptotic decay rate of coherences at separation s.
template <typename Scalar>
Scalar expected_decay_rate(const CollapseParams& cp, int n_particles, Scalar separation) {
  return Scalar(n_particles) * Scalar(cp.lambda) * -std::expm1(-Scalar(cp.alpha()) * separation * separation / Scalar(4));
}

template <typename Scalar = double>
struct EvolveOptions {
  Scalar dt_safety = 0.1;  // dt <= dt_safety * m * spacing^2 / hbar
  bool enforce_dt_rule = true;
  Scalar trace_tolerance = 1e-8;
  Scalar hermiticity_tolerance = 1e-10;  // relative to max |rho|
  Scalar positivity_tolerance = 1e-12;   // relative to max diagonal
  long observe_every = 0;
  std::function<void(const DensityGrid<Scalar>&, long step)> observer;
};

template <typename Scalar>
Scalar max_stable_dt(const DensityGrid<Scalar>& grid, Scalar mass, Scalar hbar, Scalar safety = Scalar(0.1)) {
  return safety * mass * grid.spacing * grid.spacing / hbar;
}

/// Advances rho by n_steps of size dt. Throws InvariantError if trace,
/// Hermiticity or diagonal positivity drift past tolerance; otherwise the
/// result is re-symmetrized and renormalized after each step.
template <typename Scalar>
DensityGrid<Scalar> evolve(DensityGrid<Scalar> grid, const WavepacketParams& wp, const CollapseParams& cp, Scalar hbar,
                           Scalar dt, long n_steps, const EvolveOptions<Scalar>& options = {}) {
  using Complex = std::complex<Scalar>;
  wp.validate();
  cp.validate();
  if (!(dt > 0)) throw DomainError("dt must be positive");
  if (n_steps < 0) throw DomainError("n_steps must be >= 0");
  const Scalar mass = wp.mass;
  if (options.enforce_dt_rule) {
    const Scalar limit = max_stable_dt(grid, mass, hbar, options.dt_safety);
    if (dt > limit) {
      throw DomainError("dt = " + std::to_string(double(dt)) + " exceeds the phase-resolution limit " +
                        std::to_string(double(limit)));
    }
  }

  const Eigen::Index n = grid.size();
  const auto k = detail::grid_wavenumbers<Scalar>(n, grid.spacing);
  std::vector<Complex> half_kinetic(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    half_kinetic[j] = std::exp(Complex(0, -hbar * k[j] * k[j] * (dt / 2) / (Scalar(2) * mass)));
  }
  // Damping depends on |i - j| only.
  const Scalar rate = Scalar(wp.effective_rate(cp));
  const Scalar alpha = cp.alpha();
  std::vector<Scalar> damping(n);
  for (Eigen::Index d = 0; d < n; ++d) {
    const Scalar s = Scalar(d) * grid.spacing;
    damping[d] = std::exp(-rate * dt * -std::expm1(-alpha * s * s / Scalar(4)));
  }

  if (options.observer) options.observer(grid, 0);
  for (long step = 1; step <= n_steps; ++step) {
    detail::conjugate_by<Scalar>(grid.rho, half_kinetic);
    if (rate > 0) {
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) grid.rho(i, j) *= damping[i > j ? i - j : j - i];
      }
    }
    detail::conjugate_by<Scalar>(grid.rho, half_kinetic);
    grid.time += dt;

    const Scalar scale = grid.rho.cwiseAbs().maxCoeff();
    const Scalar herm = grid.hermiticity_error();
    if (herm > options.hermiticity_tolerance * scale) {
      throw InvariantError("Hermiticity lost", step, double(herm / scale));
    }
    grid.rho = ((grid.rho + grid.rho.adjoint()) / Scalar(2)).eval();

    const Scalar tr = grid.trace();
    if (std::abs(tr - Scalar(1)) > options.trace_tolerance) {
      throw InvariantError("trace drifted", step, double(tr - Scalar(1)));
    }
    grid.rho /= tr;

    const auto diag = grid.rho.diagonal().real();
    if (diag.minCoeff() < -options.positivity_tolerance * diag.maxCoeff()) {
      throw InvariantError("negative diagonal entry", step, double(diag.minCoeff()));
    }

    if (options.observer && options.observe_every > 0 && step % options.observe_every == 0) {
      options.observer(grid, step);
    }
  }
  return grid;
}

/// Snapshots every `every` steps (including the initial grid).
template <typename Scalar>
std::vector<DensityGrid<Scalar>> evolve_series(const DensityGrid<Scalar>& grid, const WavepacketParams& wp,
                                               const CollapseParams& cp, Scalar hbar, Scalar dt, long n_steps,
                                               long every, EvolveOptions<Scalar> options = {}) {
  if (every < 1) throw DomainError("snapshot interval must be >= 1");
  std::vector<DensityGrid<Scalar>> series;
  options.observe_every = every;
  options.observer = [&](const DensityGrid<Scalar>& g, long) { series.push_back(g); };
  evolve(grid, wp, cp, hbar, dt, n_steps, options);
  return series;
}

/// <q>, <q^2>, <p>, <p^2>, <(qp+pq)/2> with spectral momentum operators.
template <typename Scalar>
MomentSet<Scalar> grid_moments(const DensityGrid<Scalar>& grid, Scalar hbar) {
  using Complex = std::complex<Scalar>;
  const Eigen::Index n = grid.size();
  const auto q = grid.positions();
  const auto diag = grid.rho.diagonal().real();
  const auto k = detail::grid_wavenumbers<Scalar>(n, grid.spacing);

  std::vector<Complex> p_mult(n), p2_mult(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    p_mult[j] = (j == n / 2) ? Complex(0) : Complex(hbar * k[j], 0);
    p2_mult[j] = Complex(hbar * hbar * k[j] * k[j], 0);
  }
  auto p_rho = grid.rho;
  detail::apply_spectral_columns<Scalar>(p_rho, p_mult);
  auto p2_rho = grid.rho;
  detail::apply_spectral_columns<Scalar>(p2_rho, p2_mult);

  MomentSet<Scalar> m;
  m.mean_q = (q.array() * diag.array()).sum() * grid.spacing;
  m.mean_q2 = (q.array().square() * diag.array()).sum() * grid.spacing;
  m.mean_p = p_rho.diagonal().real().sum() * grid.spacing;
  m.mean_p2 = p2_rho.diagonal().real().sum() * grid.spacing;
  m.mean_qp_sym = (q.array() * p_rho.diagonal().real().array()).sum() * grid.spacing;
  m.time = grid.time;
  return m;
}

/// Half the trace norm of the difference of two density operators.
template <typename Scalar>
Scalar trace_distance(const DensityGrid<Scalar>& a, const DensityGrid<Scalar>& b) {
  if (a.size() != b.size() || a.spacing != b.spacing) throw DomainError("grids differ in shape");
  typename DensityGrid<Scalar>::Matrix diff = (a.rho - b.rho) * a.spacing;
  diff = ((diff + diff.adjoint()) / Scalar(2)).eval();
  Eigen::SelfAdjointEigenSolver<typename DensityGrid<Scalar>::Matrix> solver(diff, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().sum() / Scalar(2);
}

/// sum_q rho(q + offset*spacing, q) * spacing over the non-wrapping range.
/// Free motion leaves it unchanged; GRW damping multiplies it by
/// exp(-rate(s) t).
template <typename Scalar>
std::complex<Scalar> coherence_at_offset(const DensityGrid<Scalar>& grid, Eigen::Index offset) {
  const Eigen::Index n = grid.size();
  if (offset < 0 || offset >= n) throw DomainError("offset outside the grid");
  std::complex<Scalar> sum = 0;
  for (Eigen::Index i = 0; i + offset < n; ++i) sum += grid.rho(i + offset, i);
  return sum * grid.spacing;
}

/// Fourier component of the coherence at offset: sum over center R of
/// exp(-i K R / hbar) rho(R + s/2, R - s/2), K = hbar * 2 pi l / (n spacing).
template <typename Scalar>
std::complex<Scalar> kernel_component(const DensityGrid<Scalar>& grid, Eigen::Index offset, Eigen::Index mode) {
  const Eigen::Index n = grid.size();
  if (offset < 0 || offset >= n) throw DomainError("offset outside the grid");
  const Scalar kappa = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(mode) / (Scalar(n) * grid.spacing);
  std::complex<Scalar> sum = 0;
  for (Eigen::Index i = 0; i + offset < n; ++i) {
    const Scalar center = (grid.position(i + offset) + grid.position(i)) / Scalar(2);
    sum += std::polar(Scalar(1), -kappa * center) * grid.rho(i + offset, i);
  }
  return sum * grid.spacing;
}

template <typename Scalar = double>
struct DecayFit {
  Scalar separation{};  // snapped to the grid
  Scalar rate{};
  Scalar rate_stderr{};
  bool degenerate = false;
};

/// Least-squares slope of log|coherence(s)| against time for each separation.
template <typename Scalar>
std::vector<DecayFit<Scalar>> decoherence_profile(const std::vector<DensityGrid<Scalar>>& series,
                                                  const std::vector<Scalar>& separations) {
  if (series.size() < 10) throw DomainError("decoherence_profile needs at least 10 time samples");
  const auto& first = series.front();
  for (const auto& g : series) {
    if (g.size() != first.size() || g.spacing != first.spacing) throw DomainError("series grids differ in shape");
  }
  const std::size_t m = series.size();
  std::vector<DecayFit<Scalar>> out;
  for (Scalar s : separations) {
    const auto offset = static_cast<Eigen::Index>(std::llround(std::abs(s) / first.spacing));
    DecayFit<Scalar> fit;
    fit.separation = Scalar(offset) * first.spacing;

    std::vector<Scalar> t(m), y(m);
    bool usable = true;
    const Scalar reference = std::abs(coherence_at_offset(first, 0));
    for (std::size_t i = 0; i < m; ++i) {
      const Scalar mag = std::abs(coherence_at_offset(series[i], offset));
      if (!(mag > Scalar(1e-12) * reference)) usable = false;
      t[i] = series[i].time;
      y[i] = std::log(std::max(mag, std::numeric_limits<Scalar>::min()));
    }
    const Scalar t_mean = std::accumulate(t.begin(), t.end(), Scalar(0)) / Scalar(m);
    const Scalar y_mean = std::accumulate(y.begin(), y.end(), Scalar(0)) / Scalar(m);
    Scalar sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
      sxx += (t[i] - t_mean) * (t[i] - t_mean);
      sxy += (t[i] - t_mean) * (y[i] - y_mean);
    }
    if (!usable || !(sxx > 0)) {
      fit.degenerate = true;
      fit.rate = 0;
      fit.rate_stderr = std::numeric_limits<Scalar>::infinity();
      out.push_back(fit);
      continue;
    }
    const Scalar slope = sxy / sxx;
    Scalar rss = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const Scalar r = y[i] - (y_mean + slope * (t[i] - t_mean));
      rss += r * r;
    }
    fit.rate = -slope;
    fit.rate_stderr = std::sqrt(rss / Scalar(m - 2) / sxx);
    out.push_back(fit);
  }
  return out;
}

}  // namespace grw
