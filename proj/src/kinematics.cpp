#include "cldnav/kinematics.hpp"

#include <cmath>

#include "cldnav/errors.hpp"

namespace cldnav {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_regular_steering(double psi) {
  if (!(std::abs(psi) < kPi / 2.0)) {
    throw SingularSteering("steering angle |psi| >= pi/2 (tangent singularity)");
  }
}

}  // namespace

double wrap_angle(double theta) {
  double t = std::fmod(theta + kPi, 2.0 * kPi);
  if (t <= 0.0) t += 2.0 * kPi;
  return t - kPi;  // (-pi, pi]
}

RobotState nonlinear_step(const RobotState& state, const ControlInput& input,
                          const MotionLimits& limits) {
  require_regular_steering(input.psi);
  const double T = limits.step;
  RobotState next;
  next.x = state.x + T * input.v * std::cos(state.theta);
  next.y = state.y + T * input.v * std::sin(state.theta);
  next.theta = wrap_angle(state.theta + T * input.v * std::tan(input.psi) / limits.wheelbase);
  return next;
}

LinearizedDynamics linearize(const RobotState& ref_state, const ControlInput& ref_input,
                             const MotionLimits& limits) {
  require_regular_steering(ref_input.psi);
  const double T = limits.step;
  const double L = limits.wheelbase;
  const double ct = std::cos(ref_state.theta);
  const double st = std::sin(ref_state.theta);
  const double tp = std::tan(ref_input.psi);
  const double cp = std::cos(ref_input.psi);

  LinearizedDynamics lin;
  lin.A = Eigen::Matrix3d::Identity();
  lin.A(0, 2) = -T * ref_input.v * st;
  lin.A(1, 2) = T * ref_input.v * ct;

  lin.B.setZero();
  lin.B(0, 0) = T * ct;
  lin.B(1, 0) = T * st;
  lin.B(2, 0) = T * tp / L;
  lin.B(2, 1) = T * ref_input.v / (L * cp * cp);

  // c makes the model exact at the reference (no heading wrap applied; the
  // planner works with unwrapped headings).
  Eigen::Vector3d f_ref;
  f_ref[0] = ref_state.x + T * ref_input.v * ct;
  f_ref[1] = ref_state.y + T * ref_input.v * st;
  f_ref[2] = ref_state.theta + T * ref_input.v * tp / L;
  lin.c = f_ref - lin.A * ref_state.vec() - lin.B * ref_input.vec();
  return lin;
}

bool check_limits(std::span<const ControlInput> plan, const MotionLimits& limits) {
  for (const auto& u : plan) {
    if (u.v < limits.u_min.v || u.v > limits.u_max.v) return false;
    if (u.psi < limits.u_min.psi || u.psi > limits.u_max.psi) return false;
  }
  for (std::size_t i = 1; i < plan.size(); ++i) {
    const double dv = plan[i].v - plan[i - 1].v;
    const double dpsi = plan[i].psi - plan[i - 1].psi;
    if (dv < limits.a_min.v || dv > limits.a_max.v) return false;
    if (dpsi < limits.a_min.psi || dpsi > limits.a_max.psi) return false;
  }
  return true;
}

}  // namespace cldnav
