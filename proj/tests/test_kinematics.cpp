#include "cldnav/kinematics.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "cldnav/errors.hpp"
#include "test_helpers.hpp"

using namespace cldnav;
using namespace cldnav::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

MotionLimits default_limits() {
  MotionLimits lim;
  lim.u_min = {-1.0, -0.7};
  lim.u_max = {1.5, 0.7};
  lim.a_min = {-0.5, -0.4};
  lim.a_max = {0.5, 0.4};
  lim.wheelbase = 1.0;
  lim.step = 0.2;
  return lim;
}

}  // namespace

TEST_SUITE("kinematics") {

TEST_CASE("nonlinear step closed forms") {
  const MotionLimits lim = default_limits();
  SUBCASE("zero input holds the state") {
    const RobotState s{1.2, -0.4, 0.7};
    const RobotState next = nonlinear_step(s, {0, 0.3}, lim);
    CHECK(next.x == doctest::Approx(s.x));
    CHECK(next.y == doctest::Approx(s.y));
    CHECK(next.theta == doctest::Approx(s.theta));
  }
  SUBCASE("straight drive along +x") {
    const RobotState next = nonlinear_step({0, 0, 0}, {1.0, 0.0}, lim);
    CHECK(next.x == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(next.y == doctest::Approx(0.0));
    CHECK(next.theta == doctest::Approx(0.0));
  }
  SUBCASE("straight drive along +y") {
    const RobotState next = nonlinear_step({0, 0, kPi / 2}, {1.0, 0.0}, lim);
    CHECK(next.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(next.y == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(next.theta == doctest::Approx(kPi / 2));
  }
  SUBCASE("steering singularity") {
    CHECK_THROWS_AS(nonlinear_step({0, 0, 0}, {1.0, kPi / 2}, lim), SingularSteering);
  }
}

TEST_CASE("linearization is exact at the reference") {
  const MotionLimits lim = default_limits();
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const RobotState s{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)};
    const ControlInput u{uniform(rng, -1, 1.4), uniform(rng, -0.6, 0.6)};
    const LinearizedDynamics lin = linearize(s, u, lim);
    const RobotState exact = nonlinear_step(s, u, lim);
    const Eigen::Vector3d predicted = lin.propagate(s.vec(), u.vec());
    CHECK((predicted - exact.vec()).norm() <= 1e-12);
  }
  CHECK_THROWS_AS(linearize({0, 0, 0}, {1.0, kPi / 2}, lim), SingularSteering);
}

TEST_CASE("propagating the straight reference") {
  const MotionLimits lim = default_limits();
  const LinearizedDynamics lin = linearize({0, 0, 0}, {1.0, 0.0}, lim);
  const Eigen::Vector3d next = lin.propagate(Eigen::Vector3d::Zero(), Eigen::Vector2d(1.0, 0.0));
  CHECK(next[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(next[1] == doctest::Approx(0.0));
  CHECK(next[2] == doctest::Approx(0.0));
}

TEST_CASE("linearization error decays second order") {
  const MotionLimits lim = default_limits();
  std::mt19937_64 rng(13);
  auto max_error = [&](double radius) {
    double worst = 0.0;
    std::mt19937_64 local(99);
    for (int i = 0; i < 200; ++i) {
      const RobotState s{uniform(local, -1, 1), uniform(local, -1, 1), uniform(local, -1.5, 1.5)};
      const ControlInput u{uniform(local, -0.8, 1.2), uniform(local, -0.5, 0.5)};
      const LinearizedDynamics lin = linearize(s, u, lim);
      RobotState sp = s;
      sp.x += radius * uniform(rng, -1, 1);
      sp.y += radius * uniform(rng, -1, 1);
      sp.theta += radius * uniform(rng, -1, 1);
      ControlInput up = u;
      up.v += radius * uniform(rng, -1, 1);
      up.psi += radius * uniform(rng, -1, 1);
      const Eigen::Vector3d lin_next = lin.propagate(sp.vec(), up.vec());
      // Compare against the unwrapped Euler step.
      Eigen::Vector3d exact;
      exact[0] = sp.x + lim.step * up.v * std::cos(sp.theta);
      exact[1] = sp.y + lim.step * up.v * std::sin(sp.theta);
      exact[2] = sp.theta + lim.step * up.v * std::tan(up.psi) / lim.wheelbase;
      worst = std::max(worst, (lin_next - exact).norm());
    }
    return worst;
  };
  const double coarse = max_error(1e-2);
  const double fine = max_error(5e-3);
  CHECK(coarse / fine >= 3.5);
}

TEST_CASE("wrap_angle maps onto (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(2 * kPi) == doctest::Approx(0.0));
  CHECK(wrap_angle(kPi + 0.1) == doctest::Approx(-kPi + 0.1));
  CHECK(wrap_angle(-0.3) == doctest::Approx(-0.3));
}

TEST_CASE("heading stays wrapped under propagation") {
  const MotionLimits lim = default_limits();
  std::mt19937_64 rng(17);
  RobotState s{0, 0, 3.0};
  for (int i = 0; i < 500; ++i) {
    s = nonlinear_step(s, {uniform(rng, -1, 1.4), uniform(rng, -0.65, 0.65)}, lim);
    CHECK(s.theta > -kPi);
    CHECK(s.theta <= kPi);
  }
}

TEST_CASE("check_limits") {
  const MotionLimits lim = default_limits();
  SUBCASE("empty plan passes") {
    CHECK(check_limits({}, lim));
  }
  SUBCASE("box violation") {
    const std::vector<ControlInput> plan{{0.5, 0.0}, {2.0, 0.0}};
    CHECK_FALSE(check_limits(plan, lim));
  }
  SUBCASE("rate violation") {
    const std::vector<ControlInput> plan{{0.0, 0.0}, {1.2, 0.0}};
    CHECK_FALSE(check_limits(plan, lim));
  }
  SUBCASE("feasible plan") {
    const std::vector<ControlInput> plan{{0.2, 0.1}, {0.6, -0.2}, {1.0, 0.1}};
    CHECK(check_limits(plan, lim));
  }
}

}  // TEST_SUITE
