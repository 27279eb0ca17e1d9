#include "cldnav/channel.hpp"

#include <cmath>

#include "cldnav/errors.hpp"

namespace cldnav {

ChannelMap::ChannelMap(std::vector<SubRegion> regions, double noise_power,
                       PathLossParams default_loss)
    : regions_(std::move(regions)), noise_power_(noise_power), default_loss_(default_loss) {
  if (noise_power_ <= 0.0) throw ValidationError("noise power must be positive");
  auto check = [](const PathLossParams& p) {
    if (p.beta <= 0.0) throw ValidationError("path-loss beta must be positive");
    if (p.alpha < 0.0) throw ValidationError("path-loss alpha must be nonnegative");
  };
  for (const auto& r : regions_) check(r.loss);
  check(default_loss_);
}

int ChannelMap::region_index(const Vec2& point) const {
  for (std::size_t l = 0; l < regions_.size(); ++l) {
    if (regions_[l].boundary.contains(point)) return static_cast<int>(l);
  }
  return -1;
}

const PathLossParams& ChannelMap::params_at(const Vec2& point) const {
  return params_of(region_index(point));
}

const PathLossParams& ChannelMap::params_of(int region_index) const {
  if (region_index < 0) return default_loss_;
  return regions_.at(static_cast<std::size_t>(region_index)).loss;
}

double channel_gain(const Vec2& pos, const Sensor& sensor, const ChannelMap& map) {
  const PathLossParams& p = map.params_at(pos);
  const double dist = std::max((pos - sensor.position).norm(), kMinGainDistance);
  return p.beta * std::pow(dist, -p.alpha);
}

double spectral_efficiency(const Vec2& pos, const Sensor& sensor, const ChannelMap& map) {
  const double snr = channel_gain(pos, sensor, map) * sensor.power / map.noise_power();
  return std::log2(1.0 + snr);
}

double collected_bits(std::span<const Vec2> trajectory, const Sensor& sensor,
                      const ChannelMap& map, double bandwidth_hz, double step_seconds) {
  if (bandwidth_hz <= 0.0) throw ValidationError("bandwidth must be positive");
  if (step_seconds <= 0.0) throw ValidationError("slot duration must be positive");
  double rate_sum = 0.0;
  for (const auto& pos : trajectory) {
    rate_sum += spectral_efficiency(pos, sensor, map);
  }
  return bandwidth_hz * step_seconds * rate_sum;
}

}  // namespace cldnav
