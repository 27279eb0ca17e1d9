#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cldnav/channel.hpp"
#include "cldnav/geometry.hpp"
#include "cldnav/kinematics.hpp"
#include "cldnav/learning.hpp"
#include "cldnav/solver.hpp"
#include "cldnav/surrogate.hpp"

namespace cldnav {

/// Objective weights: tracking, communication, learning, safety reward.
struct PlannerWeights {
  double tracking = 1.0;       // alpha_0 > 0
  double communication = 0.0;  // alpha_1 >= 0
  double learning = 0.0;       // alpha_2 >= 0
  double safety = 0.0;         // alpha_3 >= 0
};

struct PlannerConfig {
  PlannerWeights weights;
  int horizon = 20;          // H >= 1
  double d_min = 0.1;        // meters, > 0
  double d_max = 1.0;        // meters, >= d_min
  double mm_tolerance = 1e-3;  // epsilon on the efficiency-gap norm
  int mm_max_iters = 15;
  double kkt_tolerance = 1e-6;
  double reference_speed = 1.0;  // m/s, waypoint spacing along the path

  // Solver-side knobs (documented defaults; all deterministic).
  double slack_penalty = 1e4;     // exact-penalty weight on safety slacks
  double slack_tolerance = 1e-5;  // slack above this flags infeasibility
  double safety_margin = 5e-3;    // tightening absorbing model drift
  // Iterations continue until successive iterate trajectories move less than
  // this (meters/radians); frozen-dual rows are additionally tightened by
  // settle_tolerance * robot circumradius to absorb the allowed heading
  // rotation.
  double settle_tolerance = 0.02;
};

void validate_config(const PlannerConfig& config);

/// Global coarse path; at least two distinct waypoints.
struct ReferencePath {
  std::vector<RobotState> waypoints;
};

void validate_reference_path(const ReferencePath& path);

/// Static planning world shared by every scheme.
struct Environment {
  ConvexPolytope robot_shape;             // body frame, origin at robot center
  std::vector<ConvexPolytope> obstacles;  // world frame
  std::vector<Vec2> obstacle_centers;     // pose centers (for the point-mass emulation)
  std::vector<Sensor> sensors;
  ChannelMap map;
  std::vector<ModelSpec> specs;
  double bandwidth_hz = 1e5;
  double slot_seconds = 0.2;
  MotionLimits limits;
  ReferencePath reference;
  bool point_mass_collision = false;  // center distance minus circumscribed radii
};

// --- cost terms (true, non-surrogate values) ---

/// Sum of squared state deviations from the reference. Throws LengthMismatch.
double cost_tracking(std::span<const RobotState> states, std::span<const RobotState> reference);

/// Negated sum of spectral efficiencies over steps and sensors (<= 0).
double cost_communication(std::span<const RobotState> states, std::span<const Sensor> sensors,
                          const ChannelMap& map);

/// Mean predicted classification error across models given the throughput
/// the trajectory would collect.
double cost_learning(std::span<const RobotState> states, std::span<const Sensor> sensors,
                     const ChannelMap& map, std::span<const ModelSpec> specs,
                     double bandwidth_hz, double slot_seconds);

/// Negated sum of safety distances; all entries must lie in [d_min, d_max]
/// (throws OutOfBounds otherwise).
double cost_safety(std::span<const double> distances, double d_min, double d_max);

/// Local reference of H+1 states: nearest point on the path (ties resolved
/// to the earlier arc length), then arc-length steps of reference_speed*T0,
/// clamped at the final waypoint. Headings interpolate between waypoints and
/// are unwrapped to be continuous near the robot's heading.
std::vector<RobotState> extract_reference(const ReferencePath& path, const RobotState& state,
                                          const PlannerConfig& config, double step_seconds);

/// Optimized horizon: states (unwrapped headings), inputs, time-varying
/// safety distances, and per-(obstacle, step) distance certificates.
struct HorizonSolution {
  std::vector<RobotState> states;        // H+1
  std::vector<ControlInput> inputs;      // H
  std::vector<double> safety_distances;  // H+1
  std::vector<std::vector<DistanceCertificate>> certificates;  // [obstacle][step]
  double objective_value = 0.0;  // weighted sum of c0..c3 at the solution
  int mm_iterations = 0;
  bool converged = false;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
  KktResiduals kkt;
  double max_safety_slack = 0.0;
  bool flagged_infeasible = false;  // stop command issued
  std::vector<double> mm_objective_sequence;  // weighted c0 + c1 + c2 per accepted iterate
};

/// Receding-horizon planner. A planner instance carries warm-start state and
/// is single-threaded; distinct instances are independent.
class Planner {
 public:
  Planner(Environment env, PlannerConfig config);

  const Environment& environment() const { return env_; }
  const PlannerConfig& config() const { return config_; }

  /// Runs the full majorization-minimization loop from the given state.
  /// Throws NoProgress when the very first subproblem cannot be solved.
  HorizonSolution plan_horizon(const RobotState& state,
                               const std::optional<HorizonSolution>& warm_start = std::nullopt);

  /// One receding-horizon step: returns the first input plus the solution
  /// for warm-starting the next call.
  std::pair<ControlInput, HorizonSolution> mpc_step(
      const RobotState& state, const std::optional<HorizonSolution>& previous = std::nullopt);

 private:
  Environment env_;
  PlannerConfig config_;
};

}  // namespace cldnav
