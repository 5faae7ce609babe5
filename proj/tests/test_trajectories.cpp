#include "doctest.h"

#include <cmath>

#include "grw/analytic.hpp"
#include "grw/trajectories.hpp"
#include "support/oracles.hpp"

using namespace grw;

namespace {

const WavepacketParams kPacket{1.0, std::sqrt(0.5), 0.3, -0.2};
const CollapseParams kCollapse{1.0, 1.0};

bool same_bits(const EnsembleStats& a, const EnsembleStats& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    const auto& x = a.rows[k];
    const auto& y = b.rows[k];
    for (auto [u, v] : {std::pair{x.q, y.q}, {x.q2, y.q2}, {x.p, y.p}, {x.p2, y.p2}, {x.qp, y.qp}}) {
      if (u.mean != v.mean || u.se != v.se) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("random streams") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  const double x = a.normal(0, 1);
  CHECK(x == b.normal(0, 1));
  CHECK(x != c.normal(0, 1));
  CHECK(x != d.normal(0, 1));
  CHECK(splitmix64(0) != splitmix64(1));
  CHECK(sample_hit_time(0.0, a) == kNoHit);
  CHECK_THROWS_AS(sample_hit_time(-1.0, a), DomainError);
}

TEST_CASE("hit times are exponential") {
  RngStream rng(5, 0);
  std::vector<double> s(20000);
  for (auto& x : s) x = sample_hit_time(2.5, rng);
  const double p = oracle::ks_pvalue(s, [](double x) { return -std::expm1(-2.5 * x); });
  CHECK(p > 1e-3);
}

TEST_CASE("hit centers follow the predictive law and states localize") {
  const auto s = free_evolve(State::minimum_uncertainty(kPacket), 0.8, 1.0, 1.0);
  const CollapseParams cp{1.0, 0.6};
  RngStream rng(9, 1);
  std::vector<double> centers(20000);
  for (auto& x : centers) {
    auto [post, event] = apply_hit(s, cp, 1.0, rng);
    x = event.center;
    CHECK(post.var_q() < s.var_q());
  }
  const double mean = s.center;
  const double sd = std::sqrt(s.var_q() + cp.r_c * cp.r_c / 2.0);
  CHECK(oracle::ks_pvalue(centers, [&](double x) { return oracle::normal_cdf(x, mean, sd); }) > 1e-3);
}

TEST_CASE("without collapse every trajectory is the Schrodinger packet") {
  const std::vector<double> grid{0.0, 0.5, 1.0, 3.0};
  const auto stats = run_ensemble(kPacket, CollapseParams{0.0, 1.0}, UnitSystem::natural(), grid, 50, 1);
  for (const auto& r : stats.rows) {
    const auto e = schrodinger_moments(kPacket, 1.0, r.time);
    CHECK(r.q2.mean == doctest::Approx(e.mean_q2).epsilon(1e-13));
    CHECK(r.p2.mean == doctest::Approx(e.mean_p2).epsilon(1e-13));
    CHECK(r.qp.mean == doctest::Approx(e.mean_qp_sym).epsilon(1e-13));
    CHECK(r.q2.se < 1e-14);
  }
}

TEST_CASE("ensemble moments agree with the analytic corrections") {
  const std::vector<double> grid{0.5, 1.0, 2.0};
  const auto stats = run_ensemble(kPacket, kCollapse, UnitSystem::natural(), grid, 4000, 2024);
  for (const auto& r : stats.rows) {
    const auto e = grw_moments(kPacket, kCollapse, 1.0, schrodinger_moments(kPacket, 1.0, r.time), r.time);
    CHECK(std::abs(r.q.mean - e.mean_q) < 4 * r.q.se);
    CHECK(std::abs(r.p.mean - e.mean_p) < 4 * r.p.se);
    CHECK(std::abs(r.q2.mean - e.mean_q2) < 4 * r.q2.se);
    CHECK(std::abs(r.p2.mean - e.mean_p2) < 4 * r.p2.se);
    CHECK(std::abs(r.qp.mean - e.mean_qp_sym) < 4 * r.qp.se);
  }
}

TEST_CASE("SI units are handled by the natural-unit frame") {
  // Time scale m dq0^2 / hbar is about 1e-10 s for these values.
  const WavepacketParams wp{1e-26, 1e-9, 2e-9, 1e-25};
  const CollapseParams cp{1e10, 1e-9};
  const auto units = UnitSystem::si();
  const std::vector<double> grid{5e-11, 1e-10, 2e-10};
  const auto stats = run_ensemble(wp, cp, units, grid, 4000, 77);
  for (const auto& r : stats.rows) {
    const auto e = grw_moments(wp, cp, kHbarSI, schrodinger_moments(wp, kHbarSI, r.time), r.time);
    CHECK(std::abs(r.q.mean - e.mean_q) < 4 * r.q.se);
    CHECK(std::abs(r.q2.mean - e.mean_q2) < 4 * r.q2.se);
    CHECK(std::abs(r.p2.mean - e.mean_p2) < 4 * r.p2.se);
    CHECK(std::abs(r.qp.mean - e.mean_qp_sym) < 4 * r.qp.se);
  }
  const auto traj = simulate_trajectory(wp, cp, units, grid, 77, 0);
  CHECK(traj.states.size() == 3);
  for (const auto& h : traj.hits) CHECK(h.time <= grid.back());
  CHECK(traj.states.back().time == doctest::Approx(2e-10).epsilon(1e-12));
}

TEST_CASE("standard error shrinks as one over root n") {
  const std::vector<double> grid{1.0};
  std::vector<double> log_n, log_se;
  for (std::size_t n : {1000u, 4000u, 16000u, 64000u}) {
    const auto stats = run_ensemble(kPacket, kCollapse, UnitSystem::natural(), grid, n, 99);
    log_n.push_back(std::log(double(n)));
    log_se.push_back(std::log(stats.rows[0].q2.se));
  }
  CHECK(oracle::least_squares(log_n, log_se).slope == doctest::Approx(-0.5).epsilon(0.06));
}

TEST_CASE("results do not depend on the worker count") {
  const std::vector<double> grid{0.5, 1.0, 2.0};
  EnsembleOptions one, many;
  one.workers = 1;
  many.workers = 3;
  const auto a = run_ensemble(kPacket, kCollapse, UnitSystem::natural(), grid, 5000, 42, one);
  const auto b = run_ensemble(kPacket, kCollapse, UnitSystem::natural(), grid, 5000, 42, many);
  const auto c = run_ensemble(kPacket, kCollapse, UnitSystem::natural(), grid, 5000, 42, one);
  CHECK(same_bits(a, b));
  CHECK(same_bits(a, c));
  const auto d = run_ensemble(kPacket, kCollapse, UnitSystem::natural(), grid, 5000, 43, one);
  CHECK_FALSE(same_bits(a, d));

  const auto finals = sample_final_states(kPacket, kCollapse, UnitSystem::natural(), 1.0, 10, 42, many);
  for (std::size_t i = 0; i < finals.size(); ++i) {
    const auto t = simulate_trajectory(kPacket, kCollapse, UnitSystem::natural(), {1.0}, 42, i);
    CHECK(finals[i].center == t.states[0].center);
    CHECK(finals[i].inv_width == t.states[0].inv_width);
  }
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(run_ensemble(kPacket, kCollapse, UnitSystem::natural(), {}, 10, 1), DomainError);
  CHECK_THROWS_AS(run_ensemble(kPacket, kCollapse, UnitSystem::natural(), {1.0, 0.5}, 10, 1), DomainError);
  CHECK_THROWS_AS(run_ensemble(kPacket, kCollapse, UnitSystem::natural(), {-1.0}, 10, 1), DomainError);
  CHECK_THROWS_AS(run_ensemble(kPacket, kCollapse, UnitSystem::natural(), {1.0}, 0, 1), DomainError);
  EnsembleOptions tight;
  tight.max_hits_per_trajectory = 5;
  tight.workers = 1;
  try {
    run_ensemble(kPacket, CollapseParams{100.0, 1.0}, UnitSystem::natural(), {1.0}, 10, 1, tight);
    FAIL("expected the hit budget to run out");
  } catch (const EnsembleLimitError& e) {
    CHECK(e.completed() == 0);
  }
}
