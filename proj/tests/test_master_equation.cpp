#include "doctest.h"

#include <cmath>
#include <random>

#include "grw/analytic.hpp"
#include "grw/master_equation.hpp"
#include "grw/trajectories.hpp"
#include "support/oracles.hpp"

using namespace grw;
using Grid = DensityGrid<double>;

namespace {

Grid packet_grid(const WavepacketParams& wp, double half_width, Eigen::Index n) {
  return render_state(GaussianState<double>::minimum_uncertainty(wp), 1.0, half_width, n);
}

Grid evolve_to(const Grid& g, const WavepacketParams& wp, const CollapseParams& cp, double t, long steps,
               bool enforce = true) {
  EvolveOptions<double> opts;
  opts.enforce_dt_rule = enforce;
  return evolve(g, wp, cp, 1.0, t / steps, steps, opts);
}

}  // namespace

TEST_CASE("rendered states") {
  const WavepacketParams wp{1.0, 0.8, 0.5, 1.0};
  const auto g = packet_grid(wp, 16.0, 128);
  CHECK(g.trace() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.purity() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.hermiticity_error() < 1e-15);
  const auto m = grid_moments(g, 1.0);
  CHECK(m.mean_q == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(m.var_q() == doctest::Approx(0.64).epsilon(1e-10));
  CHECK(m.mean_p == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(m.var_p() == doctest::Approx(1.0 / (4 * 0.64)).epsilon(1e-9));
  CHECK_THROWS_AS(packet_grid(wp, 2.0, 128), DomainError);
  CHECK_THROWS_AS(render_wavefunction<double>({1.0, 1.0}, 1.0), DomainError);
}

TEST_CASE("free evolution is exact for band-limited packets") {
  const WavepacketParams wp{1.0, 1.0, -2.0, 1.5};
  const auto g0 = packet_grid(wp, 24.0, 192);
  const auto g = evolve_to(g0, wp, CollapseParams{0.0, 1.0}, 2.0, 400);
  const auto exact = render_state(free_evolve(GaussianState<double>::minimum_uncertainty(wp), 2.0, 1.0, 1.0), 1.0,
                                  24.0, 192);
  CHECK(trace_distance(g, exact) < 1e-9);
  CHECK(g.purity() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(g.time == doctest::Approx(2.0));
}

TEST_CASE("collapse dynamics reproduce the analytic moments") {
  const WavepacketParams wp{1.0, std::sqrt(0.5), 0.5, 0.4};
  const CollapseParams cp{1.0, 1.0};
  const auto g = evolve_to(packet_grid(wp, 24.0, 256), wp, cp, 1.0, 400);
  const auto m = grid_moments(g, 1.0);
  const auto e = grw_moments(wp, cp, 1.0, schrodinger_moments(wp, 1.0, 1.0), 1.0);
  CHECK(m.mean_q == doctest::Approx(e.mean_q).epsilon(1e-8));
  CHECK(m.mean_q2 == doctest::Approx(e.mean_q2).epsilon(1e-7));
  CHECK(m.mean_p2 == doctest::Approx(e.mean_p2).epsilon(1e-7));
  CHECK(m.mean_qp_sym == doctest::Approx(e.mean_qp_sym).epsilon(1e-7));
  CHECK(g.purity() < 1.0);
  CHECK(g.trace() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.hermiticity_error() == 0.0);
}

TEST_CASE("Strang splitting converges at second order") {
  const WavepacketParams wp{1.0, 1.0, 0.0, 2.0};
  const CollapseParams cp{4.0, 0.5};
  const auto g0 = packet_grid(wp, 20.0, 96);
  const double t = 0.4;
  const auto reference = evolve_to(g0, wp, cp, t, 1280, false);
  std::vector<double> err;
  for (long steps : {10, 20, 40}) {
    err.push_back((evolve_to(g0, wp, cp, t, steps, false).rho - reference.rho).cwiseAbs().maxCoeff());
  }
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.08));
  CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.08));
}

TEST_CASE("hit map") {
  const WavepacketParams wp{1.0, 1.2, 0.3, -0.5};
  const auto g = packet_grid(wp, 24.0, 192);
  const CollapseParams cp{1.0, 0.8};
  const auto h = apply_hit_map(g, cp);
  SUBCASE("entries equal the position-space integral of the localization kernel") {
    const double alpha = cp.alpha();
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<Eigen::Index> pick(0, g.size() - 1);
    for (int k = 0; k < 20; ++k) {
      const Eigen::Index i = pick(rng), j = pick(rng);
      const double a = g.position(i), b = g.position(j);
      const double factor = oracle::trapezoid(
          [&](double x) {
            return std::sqrt(alpha / std::numbers::pi) * std::exp(-alpha / 2 * ((a - x) * (a - x) + (b - x) * (b - x)));
          },
          -40, 40, 20000);
      CHECK(std::abs(h.rho(i, j) - factor * g.rho(i, j)) < 1e-12 * std::abs(g.rho(i, j)) + 1e-300);
    }
  }
  SUBCASE("the map is the average over hit outcomes of the localized projectors") {
    // T[rho] = integral over x of L_x rho L_x with L_x the normalized localization operator.
    const auto s = GaussianState<double>::minimum_uncertainty(wp);
    const auto law = hit_center_law(s, cp.alpha());
    Grid mix = g;
    mix.rho.setZero();
    const int n_x = 4000;
    const double lo = law.mean - 12 * std::sqrt(law.variance), hi = law.mean + 12 * std::sqrt(law.variance);
    const double dx = (hi - lo) / n_x;
    for (int k = 0; k <= n_x; ++k) {
      const double x = lo + k * dx;
      const double w = (k == 0 || k == n_x ? 0.5 : 1.0) * dx *
                       std::exp(-(x - law.mean) * (x - law.mean) / (2 * law.variance)) /
                       std::sqrt(2 * std::numbers::pi * law.variance);
      // Tail outcomes sit near the edge; their weight is below 1e-30.
      mix.rho += w * render_wavefunction(sample_state(localize(s, cp.alpha(), x, 1.0), 1.0, 24.0, 192), 24.0, false).rho;
    }
    CHECK(trace_distance(mix, h) < 1e-10);
  }
  SUBCASE("diagonal, trace and positivity are preserved") {
    CHECK((h.rho.diagonal() - g.rho.diagonal()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(h.purity() < g.purity());
  }
}

TEST_CASE("coherences decay at the collapse rate") {
  const WavepacketParams wp{1.0, 3.0};
  const CollapseParams cp{1.0, 1.0};
  const auto g0 = packet_grid(wp, 48.0, 256);
  const auto series = evolve_series(g0, wp, cp, 1.0, 0.01, 200, 10);
  REQUIRE(series.size() == 21);
  const std::vector<double> seps{0.375, 0.75, 1.5, 3.0, 9.0};
  const auto fits = decoherence_profile(series, seps);
  for (const auto& f : fits) {
    CHECK_FALSE(f.degenerate);
    CHECK(f.rate == doctest::Approx(expected_decay_rate(cp, 1, f.separation)).epsilon(1e-6));
  }
  SUBCASE("N particles multiply the rate") {
    WavepacketParams many = wp;
    many.n_particles = 3;
    const auto s3 = evolve_series(g0, many, cp, 1.0, 0.01, 100, 10);
    const auto f3 = decoherence_profile(s3, std::vector<double>{9.0});
    CHECK(f3[0].rate == doctest::Approx(3.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(decoherence_profile(std::vector<Grid>(series.begin(), series.begin() + 5), seps), DomainError);
}

TEST_CASE("momentum-resolved coherences follow the F factor") {
  const WavepacketParams wp{1.0, 1.5};
  const CollapseParams cp{2.0, 1.0};
  const double half_width = 24.0;
  const Eigen::Index n = 256;
  const auto g0 = packet_grid(wp, half_width, n);
  const double t = 0.6;
  const long steps = 600;
  const auto free = evolve_to(g0, wp, CollapseParams{0.0, 1.0}, t, steps);
  const auto hit = evolve_to(g0, wp, cp, t, steps);
  const double dx = g0.spacing;
  for (Eigen::Index offset : {2, 5, 8}) {
    for (Eigen::Index mode : {-3, 1, 4}) {
      const auto a = kernel_component(hit, offset, mode);
      const auto b = kernel_component(free, offset, mode);
      const double k = 2 * std::numbers::pi * mode / (n * dx);
      const double expected = f_factor(cp, k, offset * dx, t, 1.0);
      CHECK(std::abs(a / b) == doctest::Approx(expected).epsilon(2e-3));
    }
  }
}

TEST_CASE("ensemble of trajectories reproduces the density matrix") {
  const WavepacketParams wp{1.0, std::sqrt(0.5)};
  const CollapseParams cp{1.0, 1.0};
  const auto states = sample_final_states(wp, cp, UnitSystem::natural(), 0.5, 1500, 8);
  const auto avg = average_projector(states, 1.0, 20.0, 128);
  const auto g = evolve_to(packet_grid(wp, 20.0, 128), wp, cp, 0.5, 300);
  CHECK(trace_distance(avg, g) < 5.0 / std::sqrt(1500.0));
  CHECK(avg.trace() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("guards") {
  const WavepacketParams wp{1.0, 1.0};
  const auto g = packet_grid(wp, 20.0, 96);
  CHECK_THROWS_AS(evolve(g, wp, CollapseParams{1.0, 1.0}, 1.0, 1.0, 1), DomainError);
  CHECK_THROWS_AS(evolve(g, wp, CollapseParams{1.0, 1.0}, 1.0, -0.01, 1), DomainError);
  EvolveOptions<double> strict;
  strict.trace_tolerance = -1.0;
  try {
    evolve(g, wp, CollapseParams{1.0, 1.0}, 1.0, 0.001, 3, strict);
    FAIL("expected an invariant error");
  } catch (const InvariantError& e) {
    CHECK(e.step() == 1);
  }
  long calls = 0;
  EvolveOptions<double> watch;
  watch.observe_every = 2;
  watch.observer = [&](const Grid&, long) { ++calls; };
  evolve(g, wp, CollapseParams{1.0, 1.0}, 1.0, 0.001, 6, watch);
  CHECK(calls == 4);
  CHECK(max_stable_dt(g, 1.0, 1.0) == doctest::Approx(0.1 * g.spacing * g.spacing));
}
