#include "cldnav/surrogate.hpp"

#include <cmath>
#include <random>

#include <doctest.h>

#include "test_helpers.hpp"

using namespace cldnav;
using namespace cldnav::testing;

namespace {

ChannelMap plain_map(double beta, double alpha) {
  std::vector<SubRegion> regions;
  regions.push_back({ConvexPolytope::box({-20, -20}, {20, 20}), {beta, alpha}});
  return ChannelMap(std::move(regions), 1e-10, {beta, alpha});
}

}  // namespace

TEST_SUITE("surrogate") {

TEST_CASE("touches the true efficiency at the expansion") {
  const ChannelMap map = plain_map(1e-4, 2.0);
  const Sensor sensor{1, {2.0, 1.0}, 0.02};
  const std::vector<Sensor> sensors{sensor};
  const RobotState anchor{-1.5, 0.5, 0.3};
  const SurrogateExpansion exp = make_expansion(anchor, sensors, map);

  const Vec2 x0 = anchor.position();
  CHECK(std::abs(surrogate_se(x0, sensor, map, exp) - spectral_efficiency(x0, sensor, map)) <=
        1e-12);

  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    Vec2 dp = Vec2::Zero();
    dp[i] = h;
    const double gs = (surrogate_se(x0 + dp, sensor, map, exp) -
                       surrogate_se(x0 - dp, sensor, map, exp)) / (2 * h);
    const double gt = (spectral_efficiency(x0 + dp, sensor, map) -
                       spectral_efficiency(x0 - dp, sensor, map)) / (2 * h);
    CHECK(std::abs(gs - gt) <= 1e-4 * std::max(1.0, std::abs(gt)));
  }
}

TEST_CASE("lower bound over random in-region points") {
  std::mt19937_64 rng(71);
  const ChannelMap map = plain_map(1e-4, 2.5);
  const Sensor sensor{1, {0.0, 0.0}, 0.02};
  const std::vector<Sensor> sensors{sensor};
  const SurrogateExpansion exp = make_expansion({3.0, 1.0, 0.0}, sensors, map);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{uniform(rng, -19, 19), uniform(rng, -19, 19)};
    CHECK(surrogate_se(p, sensor, map, exp) <= spectral_efficiency(p, sensor, map) + 1e-9);
  }
}

TEST_CASE("validator passes on a canonical setup") {
  const ChannelMap map = plain_map(1e-4, 2.0);
  const Sensor sensor{1, {4.0, 0.0}, 0.02};
  const std::vector<Sensor> sensors{sensor};
  const SurrogateExpansion exp = make_expansion({0.0, 0.0, 0.0}, sensors, map);
  const ValidationReport report = validate_surrogate(exp, sensor, map, 800);
  CHECK(report.lower_bound_ok);
  CHECK(report.consistency_ok);
  CHECK(report.concavity_ok);
  CHECK(report.samples_used == 800);
  CHECK(report.concavity_pairs > 0);
}

TEST_CASE("validator at the clamp boundary") {
  const ChannelMap map = plain_map(1e-4, 2.0);
  const Sensor sensor{1, {0.0, 0.0}, 0.02};
  const std::vector<Sensor> sensors{sensor};
  // Expansion exactly at the clamp distance from the sensor.
  const SurrogateExpansion exp = make_expansion({kMinGainDistance, 0.0, 0.0}, sensors, map);
  const ValidationReport report = validate_surrogate(exp, sensor, map, 500);
  CHECK(report.lower_bound_ok);
  CHECK(report.max_lower_bound_violation <= 1e-9);
  CHECK(report.concavity_ok);
}

TEST_CASE("alpha zero makes the surrogate exact everywhere") {
  const ChannelMap map = plain_map(2e-4, 0.0);
  const Sensor sensor{1, {1.0, 1.0}, 0.02};
  const std::vector<Sensor> sensors{sensor};
  const SurrogateExpansion exp = make_expansion({-3.0, 2.0, 0.0}, sensors, map);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p{uniform(rng, -19, 19), uniform(rng, -19, 19)};
    CHECK(std::abs(surrogate_se(p, sensor, map, exp) -
                   spectral_efficiency(p, sensor, map)) <= 1e-12);
  }
}

TEST_CASE("region parameters resolve at the query point") {
  // Two regions with different exponents; the surrogate must switch its
  // cached powers with the query's region.
  std::vector<SubRegion> regions;
  regions.push_back({ConvexPolytope::box({-10, -10}, {0, 10}), {1e-4, 2.0}});
  regions.push_back({ConvexPolytope::box({0, -10}, {10, 10}), {1e-5, 3.0}});
  const ChannelMap map(std::move(regions), 1e-10, {1e-6, 3.0});
  const Sensor sensor{1, {-5.0, 0.0}, 0.02};
  const std::vector<Sensor> sensors{sensor};
  const RobotState anchor{-2.0, 0.0, 0.0};
  const SurrogateExpansion exp = make_expansion(anchor, sensors, map);

  // Consistency at the expansion still holds (anchor is in region 0).
  CHECK(std::abs(surrogate_se(anchor.position(), sensor, map, exp) -
                 spectral_efficiency(anchor.position(), sensor, map)) <= 1e-12);
  // Lower bound holds across both regions.
  std::mt19937_64 rng(8);
  for (int i = 0; i < 400; ++i) {
    const Vec2 p{uniform(rng, -9.9, 9.9), uniform(rng, -9.9, 9.9)};
    CHECK(surrogate_se(p, sensor, map, exp) <= spectral_efficiency(p, sensor, map) + 1e-9);
  }
}

}  // TEST_SUITE
