#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "grw/core_model.hpp"

using namespace grw;

TEST_CASE("unit systems") {
  CHECK(UnitSystem::natural().hbar == 1.0);
  CHECK(UnitSystem::si().hbar == kHbarSI);
  CHECK(UnitSystem::parse("si").mode == UnitMode::si);
  CHECK(UnitSystem::parse("SI").mode == UnitMode::si);
  CHECK(UnitSystem::parse("natural").hbar == 1.0);
  CHECK_THROWS_AS(UnitSystem::parse("cgs"), UnitError);
}

TEST_CASE("alpha is the inverse square of r_c") {
  for (double r_c : {1e-8, 1e-7, 3.3e-6, 0.5, 1.0, 7.0}) {
    const CollapseParams cp{1.0, r_c};
    CHECK(cp.alpha() * r_c * r_c == doctest::Approx(1.0).epsilon(1e-15));
  }
  const auto cp = CollapseParams::from_alpha(2.0, 4.0);
  CHECK(cp.r_c == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cp.lambda == 2.0);
  CHECK_THROWS_AS(CollapseParams::from_alpha(1.0, 0.0), DomainError);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((CollapseParams{-1.0, 1.0}.validate()), DomainError);
  CHECK_THROWS_AS((CollapseParams{1.0, 0.0}.validate()), DomainError);
  CHECK_THROWS_AS((CollapseParams{NAN, 1.0}.validate()), DomainError);
  CHECK_NOTHROW((CollapseParams{0.0, 1.0}.validate()));

  WavepacketParams wp;
  CHECK_NOTHROW(wp.validate());
  wp.n_particles = 0;
  CHECK_THROWS_AS(wp.validate(), DomainError);
  wp = {};
  wp.mass = 0.0;
  CHECK_THROWS_AS(wp.validate(), DomainError);
  wp = {};
  wp.dq0 = -1.0;
  CHECK_THROWS_AS(wp.validate(), DomainError);
}

TEST_CASE("effective rate scales with particle count") {
  const CollapseParams cp{1e-16, 1e-7};
  WavepacketParams wp;
  wp.n_particles = 1000;
  CHECK(wp.effective_rate(cp) == doctest::Approx(1e-13).epsilon(1e-15));
}

TEST_CASE("to_natural") {
  SUBCASE("lambda = 0 survives any scaling") {
    const auto np = to_natural({0.0, 2.0}, {3.0, 0.5}, UnitSystem::natural(), {17.0, 0.003});
    CHECK(np.collapse.lambda == 0.0);
  }
  SUBCASE("identity scales leave unit-mass parameters unchanged") {
    const CollapseParams cp{0.7, 1.3};
    const WavepacketParams wp{1.0, 0.4, -2.0, 0.25, 3};
    const auto np = to_natural(cp, wp, UnitSystem::natural(), {1.0, 1.0});
    CHECK(np.collapse.lambda == cp.lambda);
    CHECK(np.collapse.r_c == cp.r_c);
    CHECK(np.wavepacket.dq0 == wp.dq0);
    CHECK(np.wavepacket.q0 == wp.q0);
    CHECK(np.wavepacket.p0 == wp.p0);
    CHECK(np.wavepacket.n_particles == 3);
    CHECK(np.hbar == 1.0);
  }
  SUBCASE("SI round trip with hydrogen-scale inputs") {
    const CollapseParams cp{1e-16, 1e-7, true};
    const WavepacketParams wp{3.35e-27, 1e-10, 2e-9, 4e-30, 2};
    const auto units = UnitSystem::si();
    const auto scales = natural_scales(wp, units);
    const auto np = to_natural(cp, wp, units, scales);
    CHECK(np.hbar == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(np.wavepacket.mass == 1.0);
    CHECK(np.wavepacket.dq0 == doctest::Approx(1.0).epsilon(1e-15));
    const auto [cp2, wp2] = from_natural(np);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    CHECK(rel(cp2.lambda, cp.lambda) < 1e-12);
    CHECK(rel(cp2.r_c, cp.r_c) < 1e-12);
    CHECK(rel(wp2.mass, wp.mass) < 1e-12);
    CHECK(rel(wp2.dq0, wp.dq0) < 1e-12);
    CHECK(rel(wp2.q0, wp.q0) < 1e-12);
    CHECK(rel(wp2.p0, wp.p0) < 1e-12);
    CHECK(cp2.mass_proportional);
    CHECK(wp2.n_particles == 2);
  }
  SUBCASE("dimensionless combinations are invariant") {
    // alpha * hbar^2 * lambda * t^3 / m^2 compared with dq0^2 does not depend on units.
    const CollapseParams cp{1e-16, 1e-7};
    const WavepacketParams wp{3.35e-27, 1e-10};
    const auto units = UnitSystem::si();
    const double t = 1e5;
    const double ratio_si = cp.alpha() * units.hbar * units.hbar * cp.lambda * t * t * t / (wp.mass * wp.mass) /
                            wp.dq0_sq();
    const auto np = to_natural(cp, wp, units, {3e-9, 42.0});
    const double tn = t / 42.0;
    const double ratio_nat = np.collapse.alpha() * np.hbar * np.hbar * np.collapse.lambda * tn * tn * tn /
                             (np.wavepacket.mass * np.wavepacket.mass) / np.wavepacket.dq0_sq();
    CHECK(ratio_nat == doctest::Approx(ratio_si).epsilon(1e-12));
  }
  SUBCASE("non-positive scales are rejected") {
    CHECK_THROWS_AS(to_natural({}, {}, UnitSystem::natural(), {0.0, 1.0}), UnitError);
    CHECK_THROWS_AS(to_natural({}, {}, UnitSystem::natural(), {1.0, -2.0}), UnitError);
  }
}

TEST_CASE("key-value config") {
  const auto cfg = KeyValueConfig::from_string(
      "# hydrogen packet\n"
      "lambda = 1e-16   # per second\n"
      "r_c=1e-7\n"
      "\n"
      "units = \"si\"\n"
      "n_particles = 1e4\n"
      "outcome = 1 0.6 0 0.5\n"
      "outcome = -1 0.8 0 -0.5\n"
      "lambda = 2e-16\n");
  CHECK(cfg.get_double("lambda", 0.0) == 2e-16);
  CHECK(cfg.get_double("r_c", 0.0) == 1e-7);
  CHECK(cfg.get_string("units", "") == "si");
  CHECK(cfg.get_int("n_particles", 0) == 10000);
  CHECK(cfg.get_all("outcome").size() == 2);
  CHECK(cfg.get_double("missing", 4.5) == 4.5);
  CHECK_FALSE(cfg.contains("missing"));
  CHECK(units_from_config(cfg).mode == UnitMode::si);
  CHECK(collapse_from_config(cfg).lambda == 2e-16);

  SUBCASE("parse errors carry line numbers") {
    try {
      KeyValueConfig::from_string("a = 1\n\nthis line is wrong\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    const auto bad = KeyValueConfig::from_string("x = 1\nmass = heavy\n");
    try {
      (void)bad.get_double("mass", 1.0);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(KeyValueConfig::from_string("n = 2.5").get_int("n", 0), ParseError);
    CHECK_THROWS_AS(KeyValueConfig::from_string("= 3"), ParseError);
  }
  SUBCASE("unknown convention is rejected") {
    CHECK_THROWS_AS(collapse_from_config(KeyValueConfig::from_string("convention = weird")), UsageError);
    CHECK(collapse_from_config(KeyValueConfig::from_string("convention = mass_proportional")).mass_proportional);
  }
  SUBCASE("files") {
    const auto path = std::filesystem::temp_directory_path() / "grw_cfg_test.cfg";
    {
      std::ofstream out(path);
      out << "mass = 2\ndq0 = 0.25\nq0 = -1\np0 = 3\n";
    }
    const auto wp = wavepacket_from_config(KeyValueConfig::from_file(path));
    CHECK(wp.mass == 2.0);
    CHECK(wp.dq0 == 0.25);
    CHECK(wp.q0 == -1.0);
    CHECK(wp.p0 == 3.0);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(KeyValueConfig::from_file(path), UsageError);
  }
}
