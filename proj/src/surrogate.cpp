#include "cldnav/surrogate.hpp"

#include <cmath>
#include <random>

#include "cldnav/errors.hpp"

namespace cldnav {

namespace {

double uniform01(std::mt19937_64& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

double clamped_dist(const Vec2& a, const Vec2& b) {
  return std::max((a - b).norm(), kMinGainDistance);
}

// Bracket of the surrogate before flooring, with region parameters `p` and
// expansion cache `rc`.
double raw_bracket(const SurrogateExpansion::RegionCache& rc, const PathLossParams& p,
                   double r_eff) {
  return 2.0 * rc.inv_pow_a - rc.inv_pow_2a * std::pow(r_eff, p.alpha);
}

}  // namespace

SurrogateExpansion::SurrogateExpansion(const RobotState& state, std::span<const Sensor> sensors,
                                       const ChannelMap& map)
    : position_(state.x, state.y), heading_(state.theta) {
  const std::size_t n_regions = map.regions().size();
  sensors_.reserve(sensors.size());
  for (const auto& s : sensors) {
    SensorCache c;
    c.sensor_id = s.id;
    c.anchor = s.position;
    c.power = s.power;
    c.clamped_distance = clamped_dist(position_, s.position);
    c.per_region.resize(n_regions + 1);
    for (std::size_t l = 0; l <= n_regions; ++l) {
      const PathLossParams& p =
          (l < n_regions) ? map.regions()[l].loss : map.default_loss();
      c.per_region[l].inv_pow_a = std::pow(c.clamped_distance, -p.alpha);
      c.per_region[l].inv_pow_2a = std::pow(c.clamped_distance, -2.0 * p.alpha);
    }
    sensors_.push_back(std::move(c));
  }
}

const SurrogateExpansion::SensorCache& SurrogateExpansion::sensor_cache(int sensor_id) const {
  for (const auto& s : sensors_) {
    if (s.sensor_id == sensor_id) return s;
  }
  throw UnknownSensor("no expansion cache for sensor id " + std::to_string(sensor_id));
}

const SurrogateExpansion::RegionCache& SurrogateExpansion::cache_for(
    const SensorCache& s, int region_index) const {
  const std::size_t l = region_index < 0 ? s.per_region.size() - 1
                                         : static_cast<std::size_t>(region_index);
  return s.per_region.at(l);
}

SurrogateExpansion make_expansion(const RobotState& state, std::span<const Sensor> sensors,
                                  const ChannelMap& map) {
  return SurrogateExpansion(state, sensors, map);
}

double surrogate_se(const Vec2& pos, const Sensor& sensor, const ChannelMap& map,
                    const SurrogateExpansion& exp) {
  const int l = map.region_index(pos);
  const PathLossParams& p = map.params_of(l);
  const auto& sc = exp.sensor_cache(sensor.id);
  const auto& rc = exp.cache_for(sc, l);
  const double r_eff = clamped_dist(pos, sensor.position);
  const double bracket = std::max(0.0, raw_bracket(rc, p, r_eff));
  const double kappa = p.beta * sensor.power / map.noise_power();
  return std::log2(1.0 + kappa * bracket);
}

ValidationReport validate_surrogate(const SurrogateExpansion& exp, const Sensor& sensor,
                                    const ChannelMap& map, int samples, std::uint64_t seed) {
  if (samples < 2) throw ValidationError("validate_surrogate needs at least 2 samples");

  ValidationReport report;
  const Vec2 x0 = exp.position();
  const int home_region = map.region_index(x0);

  // Sampling box: the expansion's region when it has one, otherwise a box
  // around the expansion point.
  Vec2 lo = x0 - Vec2(8.0, 8.0);
  Vec2 hi = x0 + Vec2(8.0, 8.0);
  if (home_region >= 0) {
    const auto& verts = map.regions()[static_cast<std::size_t>(home_region)].boundary.vertices();
    lo = verts.front();
    hi = verts.front();
    for (const auto& v : verts) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }

  auto in_home_region = [&](const Vec2& q) { return map.region_index(q) == home_region; };
  auto surrogate = [&](const Vec2& q) { return surrogate_se(q, sensor, map, exp); };
  auto truth = [&](const Vec2& q) { return spectral_efficiency(q, sensor, map); };

  std::mt19937_64 rng(seed);
  std::vector<Vec2> in_region_points;
  int accepted = 0;
  int attempts = 0;
  const int max_attempts = samples * 200;
  while (accepted < samples && attempts < max_attempts) {
    ++attempts;
    const Vec2 q(lo.x() + uniform01(rng) * (hi.x() - lo.x()),
                 lo.y() + uniform01(rng) * (hi.y() - lo.y()));
    if (!in_home_region(q)) continue;
    ++accepted;
    in_region_points.push_back(q);
    report.max_lower_bound_violation =
        std::max(report.max_lower_bound_violation, surrogate(q) - truth(q));
  }
  report.samples_used = accepted;

  // Local consistency at the expansion: value plus central-difference
  // gradients of both functions.
  report.value_mismatch = std::abs(surrogate(x0) - truth(x0));
  const double h = 1e-5;
  Vec2 grad_s, grad_t;
  for (int i = 0; i < 2; ++i) {
    Vec2 dp = Vec2::Zero();
    dp[i] = h;
    grad_s[i] = (surrogate(x0 + dp) - surrogate(x0 - dp)) / (2.0 * h);
    grad_t[i] = (truth(x0 + dp) - truth(x0 - dp)) / (2.0 * h);
  }
  const double denom = std::max(grad_t.norm(), 1e-9);
  report.gradient_rel_mismatch = (grad_s - grad_t).norm() / denom;

  // Midpoint concavity over pairs where the bracket stays positive (the
  // active set the planner operates on) and the midpoint stays in-region.
  const PathLossParams& home_params = map.params_of(home_region);
  const auto& sc = exp.sensor_cache(sensor.id);
  const auto& rc = exp.cache_for(sc, home_region);
  auto active = [&](const Vec2& q) {
    const double r_eff = clamped_dist(q, sensor.position);
    return raw_bracket(rc, home_params, r_eff) > 1e-12;
  };
  for (std::size_t i = 0; i + 1 < in_region_points.size(); i += 2) {
    const Vec2& p = in_region_points[i];
    const Vec2& q = in_region_points[i + 1];
    const Vec2 mid = 0.5 * (p + q);
    if (!active(p) || !active(q) || !active(mid) || !in_home_region(mid)) continue;
    ++report.concavity_pairs;
    const double gap = 0.5 * (surrogate(p) + surrogate(q)) - surrogate(mid);
    report.max_concavity_violation = std::max(report.max_concavity_violation, gap);
  }

  report.lower_bound_ok = report.max_lower_bound_violation <= 1e-9;
  report.consistency_ok = report.value_mismatch <= 1e-12 && report.gradient_rel_mismatch <= 1e-4;
  report.concavity_ok = report.max_concavity_violation <= 1e-9;
  return report;
}

}  // namespace cldnav
