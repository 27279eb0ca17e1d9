#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cldnav/geometry.hpp"

namespace cldnav {

/// Distances below this are clamped before the power law is applied, so a
/// robot passing over a sensor sees a finite gain.
inline constexpr double kMinGainDistance = 0.1;

struct Sensor {
  int id = 0;
  Vec2 position = Vec2::Zero();  // (a_k, b_k), meters
  double power = 0.0;            // watts
};

/// Path-loss pair: gain beta at 1 m and exponent alpha (alpha = 0 means no
/// distance dependence).
struct PathLossParams {
  double beta = 1.0;
  double alpha = 0.0;
};

struct SubRegion {
  ConvexPolytope boundary;
  PathLossParams loss;
};

/// Ordered list of sub-regions with fitted path-loss parameters. A query
/// point belongs to the lowest-index region containing it; points outside
/// every region fall back to default_loss.
class ChannelMap {
 public:
  ChannelMap() = default;
  ChannelMap(std::vector<SubRegion> regions, double noise_power, PathLossParams default_loss);

  /// Index of the active region, or -1 for the default fallback.
  int region_index(const Vec2& point) const;
  const PathLossParams& params_at(const Vec2& point) const;
  const PathLossParams& params_of(int region_index) const;

  const std::vector<SubRegion>& regions() const { return regions_; }
  double noise_power() const { return noise_power_; }
  const PathLossParams& default_loss() const { return default_loss_; }

 private:
  std::vector<SubRegion> regions_;
  double noise_power_ = 1e-10;
  PathLossParams default_loss_;
};

/// Region-aware channel gain beta_l * ||pos - sensor||^{-alpha_l}, with the
/// distance clamped below at kMinGainDistance.
double channel_gain(const Vec2& pos, const Sensor& sensor, const ChannelMap& map);

/// log2(1 + gain * power / noise), in bits/s/Hz.
double spectral_efficiency(const Vec2& pos, const Sensor& sensor, const ChannelMap& map);

/// B * T0 * sum of spectral efficiencies along the trajectory, in bits.
double collected_bits(std::span<const Vec2> trajectory, const Sensor& sensor,
                      const ChannelMap& map, double bandwidth_hz, double step_seconds);

}  // namespace cldnav
