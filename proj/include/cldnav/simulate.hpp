#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cldnav/scenario.hpp"

namespace cldnav {

/// Closed-loop results for one (scenario, scheme) run. Wall times are
/// measured but never serialized, so emitted metrics stay byte-reproducible.
struct RunMetrics {
  std::string scheme;
  std::uint64_t seed = 0;
  bool reached_goal = false;
  bool deadlocked = false;
  int steps_used = 0;
  double min_obstacle_distance = 0.0;
  std::map<int, double> collected_bits_by_sensor;
  std::map<std::string, double> predicted_error_by_model;
  double total_bits = 0.0;
  double mean_error = 0.0;
  std::vector<RobotState> trajectory;
  std::vector<int> mm_iterations;          // per MPC step
  std::vector<bool> mm_converged;          // per MPC step
  std::vector<std::vector<double>> mm_objectives;  // per-step accepted-iterate objectives
  std::vector<int> flagged_steps;          // stop commands / recorded planner errors
  std::vector<std::string> planner_errors;
  double wall_time_seconds = 0.0;
  double max_step_seconds = 0.0;
};

/// Runs the closed loop: plan, apply the first input through the nonlinear
/// model, accumulate throughput, stop at the goal / max_steps / deadlock.
/// Planner errors are recorded in the metrics, not thrown. Deterministic for
/// fixed inputs; the seed only drives the optional start perturbation.
RunMetrics run(const Scenario& scenario, SchemeId scheme, std::uint64_t seed = 0);

struct ComparisonReport {
  std::string scenario_name;
  std::vector<RunMetrics> runs;
};

/// Runs every scheme (at least two) and tabulates the metrics.
ComparisonReport compare(const Scenario& scenario, const std::vector<SchemeId>& schemes,
                         std::uint64_t seed = 0);

/// Deterministic serialization (no timing fields).
std::string metrics_json(const ComparisonReport& report);
std::string metrics_csv(const ComparisonReport& report);
void write_metrics(const ComparisonReport& report, const std::string& out_dir);

std::string format_comparison_table(const ComparisonReport& report);

}  // namespace cldnav
