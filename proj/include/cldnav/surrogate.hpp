#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cldnav/channel.hpp"
#include "cldnav/kinematics.hpp"

namespace cldnav {

/// Snapshot of one expansion state for the concave spectral-efficiency
/// lower bound. For every sensor it caches the clamped expansion distance
/// and, per region (plus the default fallback), the powers
/// ||s* - c_k||^{-alpha_l} and ||s* - c_k||^{-2 alpha_l}.
/// Distances are planar; the heading plays no role in the norm.
class SurrogateExpansion {
 public:
  struct RegionCache {
    double inv_pow_a = 0.0;   // rho^{-alpha_l}
    double inv_pow_2a = 0.0;  // rho^{-2 alpha_l}
  };
  struct SensorCache {
    int sensor_id = 0;
    Vec2 anchor = Vec2::Zero();   // sensor position
    double power = 0.0;
    double clamped_distance = 0.0;
    std::vector<RegionCache> per_region;  // index L = default fallback
  };

  SurrogateExpansion(const RobotState& state, std::span<const Sensor> sensors,
                     const ChannelMap& map);

  const Vec2& position() const { return position_; }
  double heading() const { return heading_; }
  const SensorCache& sensor_cache(int sensor_id) const;
  const std::vector<SensorCache>& sensors() const { return sensors_; }
  const RegionCache& cache_for(const SensorCache& s, int region_index) const;

 private:
  Vec2 position_ = Vec2::Zero();
  double heading_ = 0.0;
  std::vector<SensorCache> sensors_;
};

SurrogateExpansion make_expansion(const RobotState& state, std::span<const Sensor> sensors,
                                  const ChannelMap& map);

/// Concave lower bound of spectral_efficiency around the expansion state:
///   log2(1 + beta_l p / sigma^2 * [2 rho^{-a} - rho^{-2a} r^a]_+)
/// with region parameters resolved at `pos` and both distances clamped at
/// kMinGainDistance. The bracket is floored at zero, which keeps the value
/// defined and below the true efficiency everywhere.
double surrogate_se(const Vec2& pos, const Sensor& sensor, const ChannelMap& map,
                    const SurrogateExpansion& exp);

struct ValidationReport {
  double max_lower_bound_violation = 0.0;  // max(surrogate - true) over samples
  double value_mismatch = 0.0;             // |surrogate - true| at expansion
  double gradient_rel_mismatch = 0.0;      // central differences, h = 1e-5
  double max_concavity_violation = 0.0;    // midpoint test on active in-region pairs
  int samples_used = 0;
  int concavity_pairs = 0;
  bool lower_bound_ok = false;
  bool consistency_ok = false;
  bool concavity_ok = false;
  bool passed() const { return lower_bound_ok && consistency_ok && concavity_ok; }
};

/// Numerically checks the three surrogate conditions (lower bound, midpoint
/// concavity on the active set, value/gradient consistency at the expansion)
/// by sampling inside the expansion's region. Deterministic for a fixed seed.
ValidationReport validate_surrogate(const SurrogateExpansion& exp, const Sensor& sensor,
                                    const ChannelMap& map, int samples,
                                    std::uint64_t seed = 20240901ULL);

}  // namespace cldnav
