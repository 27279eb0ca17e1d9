#pragma once

#include <Eigen/Dense>
#include <span>

namespace cldnav {

/// Planar pose (x, y) in meters, heading theta in radians.
struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Eigen::Vector2d position() const { return {x, y}; }
  Eigen::Vector3d vec() const { return {x, y, theta}; }
  static RobotState from_vec(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
};

/// Action: linear velocity v (m/s) and steering angle psi (rad).
struct ControlInput {
  double v = 0.0;
  double psi = 0.0;

  Eigen::Vector2d vec() const { return {v, psi}; }
};

/// Box limits on inputs, per-step input-change limits, geometry and step size.
struct MotionLimits {
  ControlInput u_min;
  ControlInput u_max;
  ControlInput a_min;  // lower bound on u_{h+1} - u_h
  ControlInput a_max;  // upper bound on u_{h+1} - u_h
  double wheelbase = 1.0;  // meters
  double step = 0.2;       // seconds
};

/// One-step affine model s' = A s + B u + c.
struct LinearizedDynamics {
  Eigen::Matrix3d A;
  Eigen::Matrix<double, 3, 2> B;
  Eigen::Vector3d c;

  Eigen::Vector3d propagate(const Eigen::Vector3d& s, const Eigen::Vector2d& u) const {
    return A * s + B * u + c;
  }
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

/// Forward-Euler step of the Ackermann model:
/// x' = x + T v cos(theta), y' = y + T v sin(theta),
/// theta' = theta + T v tan(psi) / wheelbase, wrapped to (-pi, pi].
/// Throws SingularSteering when |psi| >= pi/2.
RobotState nonlinear_step(const RobotState& state, const ControlInput& input,
                          const MotionLimits& limits);

/// Jacobian linearization of the Euler Ackermann step around (ref_state,
/// ref_input); exact at the reference point. Throws SingularSteering when
/// |ref_input.psi| >= pi/2.
LinearizedDynamics linearize(const RobotState& ref_state, const ControlInput& ref_input,
                             const MotionLimits& limits);

/// True iff every input lies in the box and every consecutive difference is
/// within [a_min, a_max]. An empty plan passes.
bool check_limits(std::span<const ControlInput> plan, const MotionLimits& limits);

}  // namespace cldnav
