#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <tuple>

#include "grw/analytic.hpp"
#include "grw/core_model.hpp"

namespace grw {

/// Pure Gaussian state
///
///   psi(q) = (Re a / pi)^{1/4} exp(-a (q - c)^2 / 2 + i p (q - c) / hbar)
///
/// with complex inverse width a (Re a > 0), center c and mean momentum p.
/// The phase is fixed relative to the center; global phases are not tracked.
template <typename Scalar = double>
struct GaussianState {
  using Complex = std::complex<Scalar>;

  Complex inv_width{1, 0};
  Scalar center{};
  Scalar momentum{};
  Scalar time{};

  static GaussianState minimum_uncertainty(const WavepacketParams& wp) {
    wp.validate();
    return {Complex(Scalar(1) / (Scalar(2) * Scalar(wp.dq0_sq())), 0), Scalar(wp.q0), Scalar(wp.p0),
            Scalar(0)};
  }

  bool valid() const { return inv_width.real() > Scalar(0) && std::isfinite(inv_width.real()); }

  Scalar var_q() const { return Scalar(1) / (Scalar(2) * inv_width.real()); }
  Scalar var_p(Scalar hbar) const { return hbar * hbar * std::norm(inv_width) / (Scalar(2) * inv_width.real()); }
  Scalar cov_qp(Scalar hbar) const { return -hbar * inv_width.imag() / (Scalar(2) * inv_width.real()); }

  MomentSet<Scalar> moments(Scalar hbar) const {
    return {center,
            center * center + var_q(),
            momentum,
            momentum * momentum + var_p(hbar),
            center * momentum + cov_qp(hbar),
            time};
  }

  Complex amplitude(Scalar q, Scalar hbar) const {
    const Scalar norm = std::pow(inv_width.real() / std::numbers::pi_v<Scalar>, Scalar(0.25));
    const Scalar x = q - center;
    return norm * std::exp(-inv_width * x * x / Scalar(2) + Complex(0, momentum * x / hbar));
  }
};

/// Exact free propagation: 1/a -> 1/a + i hbar dt / m, center drifts with p/m.
template <typename Scalar>
GaussianState<Scalar> free_evolve(const GaussianState<Scalar>& s, Scalar dt, Scalar mass, Scalar hbar) {
  using Complex = typename GaussianState<Scalar>::Complex;
  if (!(dt >= Scalar(0))) throw DomainError("free_evolve: dt must be >= 0");
  if (dt == Scalar(0)) return s;
  GaussianState<Scalar> out = s;
  out.inv_width = Scalar(1) / (Scalar(1) / s.inv_width + Complex(0, hbar * dt / mass));
  out.center = s.center + s.momentum * dt / mass;
  out.time = s.time + dt;
  return out;
}

/// Rigid translation by `shift` (action of exp(-i shift P / hbar)).
template <typename Scalar>
GaussianState<Scalar> displaced(GaussianState<Scalar> s, Scalar shift) {
  s.center += shift;
  return s;
}

/// Post-hit state for a localization centered at x: multiply by
/// exp(-(alpha/2)(q - x)^2) and renormalize. Stays Gaussian with a -> a + alpha.
template <typename Scalar>
GaussianState<Scalar> localize(const GaussianState<Scalar>& s, Scalar alpha, Scalar x, Scalar hbar) {
  const Scalar ar = s.inv_width.real();
  GaussianState<Scalar> out = s;
  out.center = (ar * s.center + alpha * x) / (ar + alpha);
  out.momentum = s.momentum + hbar * s.inv_width.imag() * (s.center - out.center);
  out.inv_width = s.inv_width + alpha;
  return out;
}

/// Density of hit centers, prop. to ||exp(-(alpha/2)(q - x)^2) psi||^2, is
/// normal with the state's mean position and variance var_q + 1/(2 alpha).
template <typename Scalar>
struct HitCenterLaw {
  Scalar mean;
  Scalar variance;
};

template <typename Scalar>
HitCenterLaw<Scalar> hit_center_law(const GaussianState<Scalar>& s, Scalar alpha) {
  return {s.center, s.var_q() + Scalar(1) / (Scalar(2) * alpha)};
}

/// <bra|ket> in closed form.
template <typename Scalar>
std::complex<Scalar> overlap(const GaussianState<Scalar>& bra, const GaussianState<Scalar>& ket, Scalar hbar) {
  using Complex = std::complex<Scalar>;
  // Work about the midpoint of the two centers to avoid large cancelling exponents.
  const Scalar origin = (bra.center + ket.center) / Scalar(2);
  auto coefficients = [&](const GaussianState<Scalar>& s) {
    const Scalar c = s.center - origin;
    const Complex a = s.inv_width;
    const Complex b = a * c + Complex(0, s.momentum / hbar);
    const Complex c0 = -a * c * c / Scalar(2) - Complex(0, s.momentum * c / hbar);
    return std::tuple{a, b, c0};
  };
  const auto [a1, b1, c1] = coefficients(bra);
  const auto [a2, b2, c2] = coefficients(ket);
  const Complex A = std::conj(a1) + a2;
  const Complex B = std::conj(b1) + b2;
  const Complex C = std::conj(c1) + c2;
  const Scalar norms = std::pow(bra.inv_width.real() * ket.inv_width.real(), Scalar(0.25)) /
                       std::sqrt(std::numbers::pi_v<Scalar>);
  return norms * std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar> / A) * std::exp(B * B / (Scalar(2) * A) + C);
}

}  // namespace grw
