// Independent reference computations used only by the tests. Nothing here
// calls into the library.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

/// Composite trapezoid rule; spectrally accurate for smooth integrands that
/// decay to zero at both ends.
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

inline std::complex<double> trapezoid_c(const std::function<std::complex<double>(double)>& f, double a, double b,
                                        int n) {
  const double h = (b - a) / n;
  std::complex<double> s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

/// Composite Simpson rule, n even.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Classical fourth-order Runge-Kutta for a small autonomous system.
template <std::size_t N, typename Rhs>
std::array<double, N> rk4(std::array<double, N> y, double t_end, int steps, Rhs&& rhs) {
  const double h = t_end / steps;
  auto axpy = [](const std::array<double, N>& a, const std::array<double, N>& b, double s) {
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i] + s * b[i];
    return out;
  };
  for (int k = 0; k < steps; ++k) {
    const auto k1 = rhs(y);
    const auto k2 = rhs(axpy(y, k1, h / 2));
    const auto k3 = rhs(axpy(y, k2, h / 2));
    const auto k4 = rhs(axpy(y, k3, h));
    for (std::size_t i = 0; i < N; ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return y;
}

/// Asymptotic Kolmogorov survival function Q(x) = 2 sum (-1)^(k-1) exp(-2 k^2 x^2).
inline double kolmogorov_q(double x) {
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

/// One-sample Kolmogorov-Smirnov p-value of `sample` against `cdf`.
inline double ks_pvalue(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

struct LineFit {
  double slope;
  double intercept;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

/// Minimum-uncertainty Gaussian wavefunction sampled directly from its textbook form.
inline std::complex<double> gaussian_psi(double q, double center, double width, double p, double hbar) {
  const double norm = std::pow(2.0 * std::numbers::pi * width * width, -0.25);
  return norm * std::exp(-(q - center) * (q - center) / (4.0 * width * width)) *
         std::exp(std::complex<double>(0.0, p * q / hbar));
}

}  // namespace oracle
