#pragma once

// Closed-form GRW results for a free Gaussian wavepacket: second-moment
// corrections, spreading laws, the reduction factor F, the collapse-to-quantum
// ratio and the coexistence curve.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "grw/core_model.hpp"
#include "grw/quadrature.hpp"

namespace grw {

template <typename Scalar = double>
struct MomentSet {
  Scalar mean_q{};
  Scalar mean_q2{};
  Scalar mean_p{};
  Scalar mean_p2{};
  Scalar mean_qp_sym{};  // <(qp + pq)/2>
  Scalar time{};

  Scalar var_q() const { return mean_q2 - mean_q * mean_q; }
  Scalar var_p() const { return mean_p2 - mean_p * mean_p; }
  Scalar cov_qp() const { return mean_qp_sym - mean_q * mean_p; }
};

/// Contributions under the square root of the spreading law.
template <typename Scalar = double>
struct SpreadTerms {
  Scalar initial{};      // dq0^2
  Scalar correlation{};  // xi_dot_0 * t
  Scalar quantum{};      // dp0^2 t^2 / m^2
  Scalar collapse{};     // alpha lambda hbar^2 t^3 / (6 m^2)

  Scalar radicand() const { return initial + correlation + quantum + collapse; }
};

template <typename Scalar = double>
struct SpreadPoint {
  Scalar time{};
  Scalar width{};
  SpreadTerms<Scalar> terms;
};

template <typename Scalar = double>
struct SpreadCurve {
  std::vector<Scalar> times;
  std::vector<Scalar> widths;
  std::vector<SpreadTerms<Scalar>> terms;

  void push_back(const SpreadPoint<Scalar>& p) {
    times.push_back(p.time);
    widths.push_back(p.width);
    terms.push_back(p.terms);
  }
};

/// Initial data for a non-Gaussian packet: variance derivative and momentum spread.
template <typename Scalar = double>
struct NonGaussianInit {
  Scalar xi_dot0{};
  Scalar dp0{};
};

namespace detail {

template <typename Scalar>
void require_time(Scalar t) {
  if (!(t >= Scalar(0))) throw DomainError("time must be >= 0");
}

template <typename Scalar>
SpreadPoint<Scalar> finish_spread(Scalar t, const SpreadTerms<Scalar>& terms) {
  const Scalar r = terms.radicand();
  if (r < Scalar(0)) {
    std::string culprit = "correlation";
    if (terms.initial < 0) culprit = "initial";
    throw DomainError("negative radicand in spreading law; offending term: " + culprit +
                      " = " + std::to_string(static_cast<double>(terms.correlation)));
  }
  return {t, std::sqrt(r), terms};
}

}  // namespace detail

/// Minimum-uncertainty momentum spread hbar / (2 dq0).
template <typename Scalar = double>
Scalar gaussian_dp0(const WavepacketParams& wp, Scalar hbar) {
  return hbar / (Scalar(2) * Scalar(wp.dq0));
}

/// Exact free-evolution moments of the Gaussian packet described by wp.
template <typename Scalar = double>
MomentSet<Scalar> schrodinger_moments(const WavepacketParams& wp, Scalar hbar, Scalar t) {
  detail::require_time(t);
  wp.validate();
  const Scalar m = wp.mass;
  const Scalar dp2 = gaussian_dp0<Scalar>(wp, hbar) * gaussian_dp0<Scalar>(wp, hbar);
  const Scalar q = Scalar(wp.q0) + Scalar(wp.p0) * t / m;
  const Scalar p = wp.p0;
  const Scalar var_q = Scalar(wp.dq0_sq()) + dp2 * t * t / (m * m);
  const Scalar cov = dp2 * t / m;
  return {q, q * q + var_q, p, p * p + dp2, q * p + cov, t};
}

/// Adds the GRW collapse corrections to standard-evolution moments at time t.
/// First moments pass through unchanged.
template <typename Scalar = double>
MomentSet<Scalar> grw_moments(const WavepacketParams& wp, const CollapseParams& cp, Scalar hbar,
                              const MomentSet<Scalar>& schrodinger, Scalar t) {
  detail::require_time(t);
  cp.validate();
  wp.validate();
  const Scalar m = wp.mass;
  const Scalar kick = Scalar(cp.alpha()) * Scalar(wp.effective_rate(cp)) * hbar * hbar;
  MomentSet<Scalar> out = schrodinger;
  out.mean_q2 += kick * t * t * t / (Scalar(6) * m * m);
  out.mean_p2 += kick * t / Scalar(2);
  out.mean_qp_sym += kick * t * t / (Scalar(4) * m);
  out.time = t;
  return out;
}

template <typename Scalar = double>
SpreadTerms<Scalar> schrodinger_terms(const WavepacketParams& wp, Scalar hbar, Scalar t) {
  const Scalar dp = gaussian_dp0<Scalar>(wp, hbar);
  const Scalar m = wp.mass;
  return {Scalar(wp.dq0_sq()), Scalar(0), dp * dp * t * t / (m * m), Scalar(0)};
}

/// Gaussian-mode free spreading; the correlation term vanishes identically.
template <typename Scalar = double>
SpreadPoint<Scalar> schrodinger_spread(const WavepacketParams& wp, Scalar hbar, Scalar t) {
  detail::require_time(t);
  wp.validate();
  return detail::finish_spread(t, schrodinger_terms(wp, hbar, t));
}

template <typename Scalar = double>
Scalar schrodinger_width(const WavepacketParams& wp, Scalar hbar, Scalar t) {
  return schrodinger_spread(wp, hbar, t).width;
}

/// Advanced entry point for packets that are not minimum-uncertainty Gaussians.
/// Only real correlation values are supported.
template <typename Scalar = double>
SpreadPoint<Scalar> schrodinger_spread(const WavepacketParams& wp, const NonGaussianInit<Scalar>& init,
                                       Scalar t) {
  detail::require_time(t);
  wp.validate();
  const Scalar m = wp.mass;
  SpreadTerms<Scalar> terms{Scalar(wp.dq0_sq()), init.xi_dot0 * t,
                            init.dp0 * init.dp0 * t * t / (m * m), Scalar(0)};
  return detail::finish_spread(t, terms);
}

template <typename Scalar = double>
SpreadPoint<Scalar> grw_spread(const WavepacketParams& wp, const CollapseParams& cp, Scalar hbar,
                               Scalar t) {
  detail::require_time(t);
  wp.validate();
  cp.validate();
  const Scalar m = wp.mass;
  auto terms = schrodinger_terms(wp, hbar, t);
  terms.collapse = Scalar(cp.alpha()) * Scalar(wp.effective_rate(cp)) * hbar * hbar * t * t * t /
                   (Scalar(6) * m * m);
  return detail::finish_spread(t, terms);
}

template <typename Scalar = double>
Scalar grw_width(const WavepacketParams& wp, const CollapseParams& cp, Scalar hbar, Scalar t) {
  return grw_spread(wp, cp, hbar, t).width;
}

template <typename Scalar = double>
SpreadCurve<Scalar> grw_spread_curve(const WavepacketParams& wp, const CollapseParams& cp, Scalar hbar,
                                     const std::vector<Scalar>& times) {
  SpreadCurve<Scalar> curve;
  for (Scalar t : times) curve.push_back(grw_spread(wp, cp, hbar, t));
  return curve;
}

// ---------------------------------------------------------------------------
// Reduction factor F(lambda, k, q, t) = exp(-lambda t (1 - <g>)), where <g> is
// the time average over [0, t] of exp(-(alpha/4)(q - k tau/m)^2). Both routes
// below return the shortfall 1 - <g> so that small exponents keep precision.

namespace detail {

// 1 - mean of exp(-u^2) over [lo, hi].
template <typename Scalar>
Scalar gaussian_mean_shortfall(Scalar u0, Scalar u1) {
  using std::abs;
  if (u0 == u1) return -std::expm1(-u0 * u0);
  const Scalar lo = std::min(u0, u1);
  const Scalar hi = std::max(u0, u1);
  const Scalar width = hi - lo;
  const Scalar reach = std::max(abs(lo), abs(hi));

  if (reach < Scalar(0.5)) {
    // 1 - e^{-u^2} = sum_j (-1)^{j+1} u^{2j} / j!, averaged term by term.
    Scalar sum = 0;
    Scalar factorial = 1;
    for (int j = 1; j <= 24; ++j) {
      factorial *= j;
      const int n = 2 * j + 1;
      Scalar mean_pow;
      if (lo * hi > 0) {
        // (hi^n - lo^n) / (hi - lo) as a sum of positive-sign products.
        Scalar acc = 0;
        for (int i = 0; i < n; ++i) acc += std::pow(hi, i) * std::pow(lo, n - 1 - i);
        mean_pow = acc / n;
      } else {
        mean_pow = (std::pow(hi, n) - std::pow(lo, n)) / (n * width);
      }
      const Scalar term = mean_pow / factorial;
      sum += (j % 2 == 1) ? term : -term;
      if (term < std::numeric_limits<Scalar>::epsilon() * sum * Scalar(1e-3)) break;
    }
    return sum;
  }

  const Scalar mid = (lo + hi) / 2;
  if (width * std::max(Scalar(1), abs(mid)) < Scalar(1e-3)) {
    // Midpoint Taylor expansion of the average.
    const Scalar m2 = mid * mid;
    const Scalar h2 = width * width;
    const Scalar d2 = Scalar(4) * m2 - Scalar(2);
    const Scalar d4 = Scalar(16) * m2 * m2 - Scalar(48) * m2 + Scalar(12);
    const Scalar d6 = Scalar(64) * m2 * m2 * m2 - Scalar(480) * m2 * m2 + Scalar(720) * m2 - Scalar(120);
    const Scalar mean = std::exp(-m2) * (Scalar(1) + h2 * d2 / Scalar(24) + h2 * h2 * d4 / Scalar(1920) +
                                         h2 * h2 * h2 * d6 / Scalar(322560));
    return Scalar(1) - mean;
  }

  Scalar diff;
  if (lo >= 0) {
    diff = std::erfc(lo) - std::erfc(hi);
  } else if (hi <= 0) {
    diff = std::erfc(-hi) - std::erfc(-lo);
  } else {
    diff = std::erf(hi) - std::erf(lo);
  }
  const Scalar mean = std::sqrt(std::numbers::pi_v<Scalar>) / Scalar(2) * diff / width;
  return Scalar(1) - mean;
}

template <typename Scalar>
void require_f_args(const CollapseParams& cp, Scalar t, Scalar mass) {
  cp.validate();
  require_time(t);
  if (!(mass > Scalar(0))) throw DomainError("mass must be > 0");
}

}  // namespace detail

/// Error-function route.
template <typename Scalar = double>
Scalar f_factor_closed(const CollapseParams& cp, Scalar k, Scalar q, Scalar t, Scalar mass) {
  detail::require_f_args(cp, t, mass);
  if (t == Scalar(0)) return Scalar(1);
  const Scalar root_alpha = std::sqrt(Scalar(cp.alpha()));
  const Scalar u0 = root_alpha * q / Scalar(2);
  const Scalar u1 = root_alpha * (q - k * t / mass) / Scalar(2);
  const Scalar shortfall = detail::gaussian_mean_shortfall(u0, u1);
  return std::exp(-Scalar(cp.lambda) * t * shortfall);
}

/// Adaptive Gauss-Kronrod route. abs_error bounds the error in F itself.
template <typename Scalar = double>
QuadratureResult<Scalar> f_factor_quadrature(const CollapseParams& cp, Scalar k, Scalar q, Scalar t,
                                             Scalar mass) {
  detail::require_f_args(cp, t, mass);
  if (t == Scalar(0)) return {Scalar(1), Scalar(0), 0};
  const Scalar quarter_alpha = Scalar(cp.alpha()) / Scalar(4);
  auto integrand = [&](Scalar tau) {
    const Scalar s = q - k * tau / mass;
    return -std::expm1(-quarter_alpha * s * s);
  };
  const auto r = integrate_adaptive<Scalar>(integrand, Scalar(0), t, Scalar(1e-16) * t, Scalar(1e-13));
  const Scalar exponent = Scalar(cp.lambda) * r.value;
  const Scalar f = std::exp(-exponent);
  return {f, f * Scalar(cp.lambda) * r.abs_error, r.evaluations};
}

/// F in (0, 1]. Evaluates the closed form and, unless cross_check is false,
/// confirms it against quadrature to `agreement` relative.
template <typename Scalar = double>
Scalar f_factor(const CollapseParams& cp, Scalar k, Scalar q, Scalar t, Scalar mass,
                bool cross_check = true, Scalar agreement = Scalar(1e-10)) {
  const Scalar closed = f_factor_closed(cp, k, q, t, mass);
  if (cross_check) {
    const auto quad = f_factor_quadrature(cp, k, q, t, mass);
    const Scalar rel = std::abs(quad.value - closed) / std::max(closed, std::numeric_limits<Scalar>::min());
    if (rel > agreement) {
      throw NumericalError("F factor: closed form and quadrature disagree", static_cast<double>(rel));
    }
  }
  return closed;
}

// ---------------------------------------------------------------------------

/// Collapse-to-quantum ratio: collapse term over quantum term of the GRW width.
template <typename Scalar = double>
Scalar cqr(const WavepacketParams& wp, const CollapseParams& cp, Scalar t) {
  detail::require_time(t);
  return Scalar(2) / Scalar(3) * Scalar(wp.effective_rate(cp)) * Scalar(wp.dq0_sq()) * t /
         (Scalar(cp.r_c) * Scalar(cp.r_c));
}

/// lambda at which the ratio equals one.
template <typename Scalar = double>
Scalar coexistence_lambda(Scalar r_c, Scalar dq0_sq, Scalar t) {
  if (!(r_c > 0) || !(dq0_sq > 0) || !(t > 0)) {
    throw DomainError("coexistence_lambda: r_c, dq0^2 and t must be positive");
  }
  return Scalar(3) * r_c * r_c / (Scalar(2) * dq0_sq * t);
}

}  // namespace grw
