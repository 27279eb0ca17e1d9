#include "cldnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cldnav/errors.hpp"
#include "cldnav/subproblem.hpp"

namespace cldnav {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Rollout under the nonlinear model without heading wrap, so tracking costs
// against unwrapped references stay continuous.
std::vector<RobotState> rollout(const RobotState& start, std::span<const ControlInput> inputs,
                                const MotionLimits& lim) {
  std::vector<RobotState> states;
  states.reserve(inputs.size() + 1);
  states.push_back(start);
  for (const auto& u : inputs) {
    const RobotState& s = states.back();
    RobotState next;
    next.x = s.x + lim.step * u.v * std::cos(s.theta);
    next.y = s.y + lim.step * u.v * std::sin(s.theta);
    next.theta = s.theta + lim.step * u.v * std::tan(u.psi) / lim.wheelbase;
    states.push_back(next);
  }
  return states;
}

double unwrap_near(double angle, double anchor) {
  while (angle - anchor > kPi) angle -= 2.0 * kPi;
  while (angle - anchor < -kPi) angle += 2.0 * kPi;
  return angle;
}

}  // namespace

void validate_config(const PlannerConfig& config) {
  if (config.horizon < 1) throw ValidationError("planner horizon must be >= 1");
  if (!(config.weights.tracking > 0.0)) throw ValidationError("tracking weight must be positive");
  if (config.weights.communication < 0.0 || config.weights.learning < 0.0 ||
      config.weights.safety < 0.0) {
    throw ValidationError("objective weights must be nonnegative");
  }
  if (!(config.d_min > 0.0)) throw ValidationError("d_min must be positive");
  if (!(config.d_min <= config.d_max)) throw ValidationError("d_min must not exceed d_max");
  if (!(config.mm_tolerance > 0.0)) throw ValidationError("mm_tolerance must be positive");
  if (config.mm_max_iters < 1) throw ValidationError("mm_max_iters must be >= 1");
  if (!(config.kkt_tolerance > 0.0)) throw ValidationError("kkt_tolerance must be positive");
  if (!(config.reference_speed > 0.0)) throw ValidationError("reference_speed must be positive");
  if (!(config.slack_penalty > 0.0)) throw ValidationError("slack_penalty must be positive");
}

void validate_reference_path(const ReferencePath& path) {
  if (path.waypoints.size() < 2) throw ValidationError("reference path needs >= 2 waypoints");
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    if ((path.waypoints[i].position() - path.waypoints[i - 1].position()).norm() <= 1e-9) {
      throw ValidationError("consecutive reference waypoints must be distinct");
    }
  }
}

double cost_tracking(std::span<const RobotState> states, std::span<const RobotState> reference) {
  if (states.size() != reference.size()) {
    throw LengthMismatch("states and reference have different lengths");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    total += (states[i].vec() - reference[i].vec()).squaredNorm();
  }
  return total;
}

double cost_communication(std::span<const RobotState> states, std::span<const Sensor> sensors,
                          const ChannelMap& map) {
  double total = 0.0;
  for (const auto& s : states) {
    for (const auto& k : sensors) {
      total -= spectral_efficiency(s.position(), k, map);
    }
  }
  return total;
}

double cost_learning(std::span<const RobotState> states, std::span<const Sensor> sensors,
                     const ChannelMap& map, std::span<const ModelSpec> specs,
                     double bandwidth_hz, double slot_seconds) {
  if (specs.empty()) throw ValidationError("cost_learning needs at least one model spec");
  const double E = static_cast<double>(specs.size());
  double total = 0.0;
  for (const auto& spec : specs) {
    double samples = 0.0;
    for (int id : spec.sensor_group) {
      const Sensor* sensor = nullptr;
      for (const auto& k : sensors) {
        if (k.id == id) sensor = &k;
      }
      if (sensor == nullptr) {
        throw UnknownSensor("model '" + spec.name + "' references unknown sensor id " +
                            std::to_string(id));
      }
      for (const auto& s : states) {
        samples += bandwidth_hz * slot_seconds *
                   spectral_efficiency(s.position(), *sensor, map) / spec.bits_per_sample;
      }
    }
    total += (spec.a / E) * std::pow(samples + spec.historical_samples, -spec.b);
  }
  return total;
}

double cost_safety(std::span<const double> distances, double d_min, double d_max) {
  double total = 0.0;
  for (double d : distances) {
    if (d < d_min - 1e-9 || d > d_max + 1e-9) {
      throw OutOfBounds("safety distance outside [d_min, d_max]");
    }
    total -= d;
  }
  return total;
}

std::vector<RobotState> extract_reference(const ReferencePath& path, const RobotState& state,
                                          const PlannerConfig& config, double step_seconds) {
  validate_reference_path(path);
  const auto& wp = path.waypoints;
  const std::size_t n = wp.size();

  // Arc-length table and unwrapped waypoint headings.
  std::vector<double> arc(n, 0.0);
  std::vector<double> heading(n, 0.0);
  heading[0] = wp[0].theta;
  for (std::size_t i = 1; i < n; ++i) {
    arc[i] = arc[i - 1] + (wp[i].position() - wp[i - 1].position()).norm();
    heading[i] = unwrap_near(wp[i].theta, heading[i - 1]);
  }

  // Nearest point on the polyline; ties resolve to the earlier arc length.
  double best_dist = std::numeric_limits<double>::infinity();
  double best_arc = 0.0;
  const Vec2 p = state.position();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec2 a = wp[i].position();
    const Vec2 b = wp[i + 1].position();
    const Vec2 ab = b - a;
    double t = (p - a).dot(ab) / ab.squaredNorm();
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 proj = a + t * ab;
    const double d = (p - proj).norm();
    if (d < best_dist - 1e-12) {
      best_dist = d;
      best_arc = arc[i] + t * ab.norm();
    }
  }

  auto state_at_arc = [&](double s) {
    s = std::clamp(s, 0.0, arc.back());
    std::size_t i = 0;
    while (i + 2 < n && s > arc[i + 1]) ++i;
    const double seg = arc[i + 1] - arc[i];
    const double t = seg > 0.0 ? (s - arc[i]) / seg : 0.0;
    RobotState out;
    const Vec2 pos = wp[i].position() + t * (wp[i + 1].position() - wp[i].position());
    out.x = pos.x();
    out.y = pos.y();
    out.theta = heading[i] + t * (heading[i + 1] - heading[i]);
    return out;
  };

  std::vector<RobotState> reference;
  reference.reserve(static_cast<std::size_t>(config.horizon) + 1);
  const double spacing = config.reference_speed * step_seconds;
  for (int h = 0; h <= config.horizon; ++h) {
    reference.push_back(state_at_arc(best_arc + spacing * h));
  }
  // Shift all headings by a multiple of 2*pi so the first is near the
  // robot's (the sequence itself is already continuous).
  const double shift = unwrap_near(reference.front().theta, state.theta) - reference.front().theta;
  for (auto& r : reference) r.theta += shift;
  return reference;
}

Planner::Planner(Environment env, PlannerConfig config)
    : env_(std::move(env)), config_(std::move(config)) {
  validate_config(config_);
  validate_reference_path(env_.reference);
  const auto& lim = env_.limits;
  if (!(lim.wheelbase > 0.0) || !(lim.step > 0.0)) {
    throw ValidationError("wheelbase and step must be positive");
  }
  if (!(lim.u_min.v < lim.u_max.v) || !(lim.u_min.psi < lim.u_max.psi)) {
    throw ValidationError("input box must have a nonempty interior");
  }
  if (!(lim.a_min.v < 0.0 && lim.a_max.v > 0.0 && lim.a_min.psi < 0.0 && lim.a_max.psi > 0.0)) {
    throw ValidationError("input-change bounds must straddle zero");
  }
  if (std::max(std::abs(lim.u_min.psi), std::abs(lim.u_max.psi)) >= kPi / 2.0) {
    throw ValidationError("steering box must stay inside (-pi/2, pi/2)");
  }
  if (env_.obstacles.size() != env_.obstacle_centers.size()) {
    throw ValidationError("each obstacle needs a center for the point-mass emulation");
  }
  if (!(env_.bandwidth_hz > 0.0) || !(env_.slot_seconds > 0.0)) {
    throw ValidationError("bandwidth and slot duration must be positive");
  }
  for (const auto& spec : env_.specs) {
    validate_model_spec(spec);
    for (int id : spec.sensor_group) {
      bool found = false;
      for (const auto& s : env_.sensors) found = found || s.id == id;
      if (!found) {
        throw ValidationError("model '" + spec.name + "' references unknown sensor id " +
                              std::to_string(id));
      }
    }
  }
  if (config_.weights.communication > 0.0 || config_.weights.learning > 0.0) {
    auto check_alpha = [](const PathLossParams& p) {
      if (p.alpha > 0.0 && p.alpha < 1.0) {
        throw ValidationError("path-loss exponents in (0, 1) are not supported by the planner");
      }
    };
    for (const auto& r : env_.map.regions()) check_alpha(r.loss);
    check_alpha(env_.map.default_loss());
  }
}

HorizonSolution Planner::plan_horizon(const RobotState& state,
                                      const std::optional<HorizonSolution>& warm_start) {
  const int H = config_.horizon;
  const auto& lim = env_.limits;
  const int M = static_cast<int>(env_.obstacles.size());
  const bool use_se = (config_.weights.communication > 0.0 || config_.weights.learning > 0.0) &&
                      !env_.sensors.empty();

  MmIterate it;
  it.initial_state = state;
  it.reference = extract_reference(env_.reference, state, config_, lim.step);

  const bool warm = warm_start.has_value() &&
                    static_cast<int>(warm_start->inputs.size()) == H && !warm_start->flagged_infeasible;
  std::vector<ControlInput> seed(static_cast<std::size_t>(H));
  if (warm) {
    // Shift by one step, duplicating the last input.
    for (int h = 0; h < H; ++h) {
      seed[static_cast<std::size_t>(h)] =
          warm_start->inputs[static_cast<std::size_t>(std::min(h + 1, H - 1))];
    }
  }
  it.inputs = repair_inputs(seed, lim);
  it.states = rollout(state, it.inputs, lim);

  it.dynamics.resize(static_cast<std::size_t>(H));
  if (warm) {
    for (int h = 0; h < H; ++h) {
      it.dynamics[static_cast<std::size_t>(h)] =
          linearize(it.states[static_cast<std::size_t>(h)], it.inputs[static_cast<std::size_t>(h)], lim);
    }
  } else {
    // Cold start: linearize along the reference segment with zero inputs.
    for (int h = 0; h < H; ++h) {
      it.dynamics[static_cast<std::size_t>(h)] =
          linearize(it.reference[static_cast<std::size_t>(h)], ControlInput{}, lim);
    }
  }

  auto build_expansions = [&](const std::vector<RobotState>& anchor) {
    std::vector<SurrogateExpansion> exps;
    if (!use_se) return exps;
    exps.reserve(anchor.size());
    for (const auto& s : anchor) exps.push_back(make_expansion(s, env_.sensors, env_.map));
    return exps;
  };
  auto build_duals = [&](const std::vector<RobotState>& anchor) {
    std::vector<std::vector<DistanceCertificate>> duals(static_cast<std::size_t>(M));
    if (env_.point_mass_collision) {
      for (int m = 0; m < M; ++m) {
        duals[static_cast<std::size_t>(m)].resize(anchor.size());
      }
      return duals;
    }
    for (int m = 0; m < M; ++m) {
      duals[static_cast<std::size_t>(m)].reserve(anchor.size());
      for (const auto& s : anchor) {
        duals[static_cast<std::size_t>(m)].push_back(
            min_distance(env_.obstacles[static_cast<std::size_t>(m)],
                         occupied_region(env_.robot_shape, s)));
      }
    }
    return duals;
  };

  auto true_p1 = [&](const std::vector<RobotState>& states) {
    double j = config_.weights.tracking * cost_tracking(states, it.reference);
    if (config_.weights.communication > 0.0 && !env_.sensors.empty()) {
      j += config_.weights.communication * cost_communication(states, env_.sensors, env_.map);
    }
    if (config_.weights.learning > 0.0 && !env_.specs.empty()) {
      j += config_.weights.learning * cost_learning(states, env_.sensors, env_.map, env_.specs,
                                                    env_.bandwidth_hz, env_.slot_seconds);
    }
    return j;
  };

  auto se_gap = [&](const std::vector<RobotState>& states,
                    const std::vector<SurrogateExpansion>& exps) {
    if (!use_se) return 0.0;
    double sq = 0.0;
    for (std::size_t h = 0; h < states.size(); ++h) {
      for (const auto& k : env_.sensors) {
        const double gamma = spectral_efficiency(states[h].position(), k, env_.map);
        const double tilde = surrogate_se(states[h].position(), k, env_.map, exps[h]);
        sq += (gamma - tilde) * (gamma - tilde);
      }
    }
    return std::sqrt(sq);
  };

  PlannerConfig active = config_;

  auto finalize = [&](HorizonSolution sol, const std::vector<double>& objective_seq,
                      int iterations, bool converged) {
    sol.mm_iterations = iterations;
    sol.converged = converged;
    sol.mm_objective_sequence = objective_seq;
    sol.certificates.assign(static_cast<std::size_t>(M), {});
    for (int m = 0; m < M; ++m) {
      auto& row = sol.certificates[static_cast<std::size_t>(m)];
      row.reserve(sol.states.size());
      for (const auto& s : sol.states) {
        row.push_back(min_distance(env_.obstacles[static_cast<std::size_t>(m)],
                                   occupied_region(env_.robot_shape, s)));
      }
    }
    // Reconcile the promised clearances with the certified ones: a promise
    // may only shrink toward what the final geometry proves, never below
    // the active lower bound.
    const double d_lo = sol.flagged_infeasible ? config_.d_min : active.d_min;
    for (std::size_t h = 0; h < sol.safety_distances.size(); ++h) {
      double certified = std::numeric_limits<double>::infinity();
      for (int m = 0; m < M; ++m) {
        certified = std::min(certified, sol.certificates[static_cast<std::size_t>(m)][h].distance);
      }
      if (M > 0 && certified < sol.safety_distances[h]) {
        sol.safety_distances[h] = std::max(d_lo, certified);
      }
    }
    sol.c0 = cost_tracking(sol.states, it.reference);
    sol.c1 = env_.sensors.empty() ? 0.0
                                  : cost_communication(sol.states, env_.sensors, env_.map);
    sol.c2 = env_.specs.empty() ? 0.0
                                : cost_learning(sol.states, env_.sensors, env_.map, env_.specs,
                                                env_.bandwidth_hz, env_.slot_seconds);
    sol.c3 = 0.0;
    for (double d : sol.safety_distances) sol.c3 -= d;
    const auto& w = config_.weights;
    sol.objective_value = w.tracking * sol.c0 + w.communication * sol.c1 + w.learning * sol.c2 +
                          w.safety * sol.c3;
    return sol;
  };

  auto stop_solution = [&]() {
    HorizonSolution sol;
    std::vector<ControlInput> zeros(static_cast<std::size_t>(H));
    sol.inputs = zeros;
    sol.states = rollout(state, zeros, lim);
    sol.safety_distances.assign(static_cast<std::size_t>(H + 1), config_.d_min);
    sol.flagged_infeasible = true;
    return finalize(std::move(sol), {}, 0, false);
  };

  bool relaxed = false;
  bool have_accepted = false;
  HorizonSolution accepted;
  double j_last = 0.0;
  std::vector<double> objective_seq;
  int iterations = 0;

  for (int n = 0; n < config_.mm_max_iters; ++n) {
    it.expansions = build_expansions(it.states);
    it.duals = build_duals(it.states);

    HorizonSolution sol;
    try {
      ConvexProgram prog = build_subproblem(env_, active, it);
      sol = solve_subproblem(prog, active);
      if (sol.max_safety_slack > config_.slack_tolerance && !relaxed) {
        // Retry once with the lower distance bound halved.
        relaxed = true;
        active.d_min = config_.d_min / 2.0;
        ConvexProgram relaxed_prog = build_subproblem(env_, active, it);
        sol = solve_subproblem(relaxed_prog, active);
      }
    } catch (const SolverFailure& e) {
      if (!have_accepted) throw NoProgress(std::string("first subproblem failed: ") + e.what());
      return finalize(std::move(accepted), objective_seq, iterations, true);
    } catch (const InfeasibleSeed& e) {
      if (!have_accepted) throw NoProgress(std::string("first subproblem failed: ") + e.what());
      return finalize(std::move(accepted), objective_seq, iterations, true);
    }
    if (sol.max_safety_slack > config_.slack_tolerance) {
      if (!have_accepted) return stop_solution();
      return finalize(std::move(accepted), objective_seq, iterations, true);
    }

    const std::vector<RobotState> anchor_next = rollout(state, sol.inputs, lim);
    const double j_new = true_p1(anchor_next);
    if (have_accepted && j_new > j_last + 1e-9 * std::max(1.0, std::abs(j_last))) {
      // The surrogate step would increase the true objective; keep the
      // previous iterate and stop at the fixed point.
      return finalize(std::move(accepted), objective_seq, iterations, true);
    }

    const double gap = se_gap(anchor_next, it.expansions);
    // With obstacles present, also iterate until the trajectory settles so
    // the final linearization and frozen duals are anchored at the returned
    // inputs; otherwise the executed step can drift off the planned
    // clearance.
    double movement = 0.0;
    for (std::size_t h = 0; h < anchor_next.size(); ++h) {
      movement = std::max(movement, (anchor_next[h].vec() - it.states[h].vec())
                                        .cwiseAbs()
                                        .maxCoeff());
    }
    ++iterations;
    objective_seq.push_back(j_new);
    accepted = std::move(sol);
    have_accepted = true;
    j_last = j_new;

    if (gap < config_.mm_tolerance && (M == 0 || movement <= config_.settle_tolerance)) {
      return finalize(std::move(accepted), objective_seq, iterations, true);
    }

    // Re-anchor at the accepted iterate for the next round.
    it.inputs = accepted.inputs;
    it.states = anchor_next;
    for (int h = 0; h < H; ++h) {
      it.dynamics[static_cast<std::size_t>(h)] =
          linearize(it.states[static_cast<std::size_t>(h)], it.inputs[static_cast<std::size_t>(h)], lim);
    }
  }
  return finalize(std::move(accepted), objective_seq, iterations, false);
}

std::pair<ControlInput, HorizonSolution> Planner::mpc_step(
    const RobotState& state, const std::optional<HorizonSolution>& previous) {
  HorizonSolution sol = plan_horizon(state, previous);
  const ControlInput input = sol.inputs.empty() ? ControlInput{} : sol.inputs.front();
  return {input, std::move(sol)};
}

}  // namespace cldnav
