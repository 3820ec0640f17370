#include <cmath>

#include <doctest.h>

#include "ermakov/error.hpp"
#include "ermakov/integrate.hpp"
#include "ermakov/invariant.hpp"
#include "oracles.hpp"

using namespace ermakov;
using expr::num;
using expr::parse;

TEST_CASE("polar invariant") {
  const PolarState s{1.0, oracle::kPi / 2, 0.0, 2.0, 0.0};
  CHECK(lewis_ray_reid_polar(s, num(0.0)).I == doctest::Approx(2.0));
  const Expression V = parse("(1 + 0*cos(theta))/sin(theta)^2");
  CHECK(lewis_ray_reid_polar(s, V).I == doctest::Approx(3.0));
}

TEST_CASE("cartesian invariant") {
  CHECK(lewis_ray_reid_cartesian({1.0, 1.0, 0.0, 1.0, 0.0}, num(0.0), num(0.0)).I ==
        doctest::Approx(0.5));
  CHECK(lewis_ray_reid_cartesian({1.0, 2.0, 0.0, 0.0, 0.0}, parse("u"), num(0.0)).I ==
        doctest::Approx(1.5));
  // Both forms agree when V is built from f and g.
  const CartesianState c{0.8, 1.1, 0.2, -0.4, 0.0};
  const Expression f = parse("u^2"), g = parse("2*v");
  CHECK(lewis_ray_reid_cartesian(c, f, g).I ==
        doctest::Approx(lewis_ray_reid_polar(to_polar(c), V_from_fg(f, g)).I).epsilon(1e-13));
}

TEST_CASE("h and the turning point") {
  const InvariantValue two{2.0, ""};
  CHECK(h(0.3, two, num(0.0)) == doctest::Approx(2.0));
  const Expression V = parse("1/sin(theta)^2");
  CHECK(h(oracle::kPi / 2, {3.0, ""}, V) == doctest::Approx(2.0));
  CHECK_THROWS_AS(h(oracle::kPi / 2, {1.0, ""}, V), TurningPoint);
  CHECK_THROWS_AS(h(oracle::kPi / 2, {0.5, ""}, V), ForbiddenRegion);
  try {
    h(0.2, {1.0, ""}, V);
    FAIL("expected ForbiddenRegion");
  } catch (const ForbiddenRegion& e) {
    CHECK(e.theta() == 0.2);
  }
}

TEST_CASE("angular velocity from the invariant") {
  const InvariantValue two{2.0, ""};
  CHECK(theta_dot_from_invariant(1.0, 0.0, two, num(0.0), +1) == doctest::Approx(2.0));
  CHECK(theta_dot_from_invariant(2.0, 0.0, two, num(0.0), +1) == doctest::Approx(0.5));
  CHECK(theta_dot_from_invariant(2.0, 0.0, two, num(0.0), -1) == doctest::Approx(-0.5));
  CHECK(branch_sign_of({1.0, 0.0, 0.0, -3.0, 0.0}) == -1);
  CHECK_THROWS(branch_sign_of({1.0, 0.0, 0.0, 0.0, 0.0}));
}

TEST_CASE("drift monitor") {
  // Circular orbit of the isotropic oscillator: I is exactly constant.
  IntegratorConfig cfg;
  cfg.t_end = 6.0;
  const PolarSystem sys(PolarSpec{num(0.0), num(0.0), num(1.0)});
  Trajectory tr = integrate_polar(sys, {1.0, 0.0, 0.0, 1.0, 0.0}, cfg);
  const DriftStats stats = monitor_invariant(tr, num(0.0));
  CHECK(stats.I0 == doctest::Approx(0.5));
  CHECK(stats.max < 1e-12);

  // A non-trivial V under default tolerances.
  const PolarSystem lib(PolarSpec{num(0.0), parse("0.3*sin(theta)^2"), num(1.0)});
  const Trajectory tl = integrate_polar(lib, {1.0, 0.2, 0.1, 0.6, 0.0}, cfg);
  CHECK(monitor_invariant(tl, parse("0.3*sin(theta)^2")).max <= 1e-6);
}
