#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "grw/errors.hpp"

namespace grw {

template <typename Scalar>
struct QuadratureResult {
  Scalar value;
  Scalar abs_error;
  int evaluations;
};

namespace detail {

// QUADPACK 7-point Gauss / 15-point Kronrod pair.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Scalar>
struct Panel {
  Scalar a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <typename Scalar, typename F>
Panel<Scalar> gauss_kronrod_15(F& f, Scalar a, Scalar b) {
  const Scalar center = (a + b) / 2;
  const Scalar half = (b - a) / 2;
  const Scalar fc = f(center);
  Scalar kronrod = fc * Scalar(kKronrodWeights[7]);
  Scalar gauss = fc * Scalar(kGaussWeights[3]);
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = half * Scalar(kKronrodNodes[j]);
    const Scalar sum = f(center - dx) + f(center + dx);
    kronrod += Scalar(kKronrodWeights[j]) * sum;
    if (j % 2 == 1) gauss += Scalar(kGaussWeights[j / 2]) * sum;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive G7K15 on [a, b]. Bisects the panel with the largest error
/// estimate until the total estimate is below max(abs_tol, rel_tol*|I|).
/// Throws NumericalError carrying the achieved error if max_panels is hit.
template <typename Scalar, typename F>
QuadratureResult<Scalar> integrate_adaptive(F f, Scalar a, Scalar b, Scalar abs_tol, Scalar rel_tol,
                                            int max_panels = 4000) {
  using Panel = detail::Panel<Scalar>;
  if (a == b) return {Scalar(0), Scalar(0), 0};

  std::vector<Panel> heap;
  heap.push_back(detail::gauss_kronrod_15(f, a, b));
  Scalar total = heap.front().value;
  Scalar error = heap.front().error;
  int evaluations = 15;

  while (error > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (static_cast<int>(heap.size()) >= max_panels) {
      throw NumericalError("adaptive quadrature did not converge", static_cast<double>(error));
    }
    std::pop_heap(heap.begin(), heap.end());
    const Panel worst = heap.back();
    heap.pop_back();
    const Scalar mid = (worst.a + worst.b) / 2;
    heap.push_back(detail::gauss_kronrod_15(f, worst.a, mid));
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(detail::gauss_kronrod_15(f, mid, worst.b));
    std::push_heap(heap.begin(), heap.end());
    evaluations += 30;

    // Re-sum from scratch to keep cancellation out of the running totals.
    total = Scalar(0);
    error = Scalar(0);
    for (const auto& p : heap) {
      total += p.value;
      error += p.error;
    }
  }
  return {total, error, evaluations};
}

}  // namespace grw
