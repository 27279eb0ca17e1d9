#include "cldnav/simulate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cldnav/errors.hpp"

namespace cldnav {

namespace {

constexpr int kDeadlockWindow = 40;
constexpr double kDeadlockProgress = 0.05;  // meters

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

RunMetrics run(const Scenario& scenario, SchemeId scheme, std::uint64_t seed) {
  RunMetrics metrics;
  metrics.scheme = to_string(scheme);
  metrics.seed = seed;

  Environment env = make_environment(scenario, scheme);
  Planner planner(env, scheme_config(scenario, scheme));

  RobotState state = scenario.start;
  if (scenario.start_perturbation > 0.0) {
    std::mt19937_64 rng(seed);
    auto u01 = [&rng] { return std::ldexp(static_cast<double>(rng() >> 11), -53); };
    const double radius = scenario.start_perturbation * u01();
    const double angle = 2.0 * 3.14159265358979323846 * u01();
    state.x += radius * std::cos(angle);
    state.y += radius * std::sin(angle);
  }

  metrics.trajectory.push_back(state);
  std::optional<HorizonSolution> previous;
  const auto t_run0 = std::chrono::steady_clock::now();

  for (int step = 0; step < scenario.max_steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    ControlInput input;  // stop command fallback
    try {
      auto [u, sol] = planner.mpc_step(state, previous);
      input = u;
      if (sol.flagged_infeasible) metrics.flagged_steps.push_back(step);
      metrics.mm_iterations.push_back(sol.mm_iterations);
      metrics.mm_converged.push_back(sol.converged);
      metrics.mm_objectives.push_back(sol.mm_objective_sequence);
      previous = std::move(sol);
    } catch (const Error& e) {
      metrics.planner_errors.push_back(std::to_string(step) + ": " + e.what());
      metrics.flagged_steps.push_back(step);
      metrics.mm_iterations.push_back(0);
      metrics.mm_converged.push_back(false);
      metrics.mm_objectives.push_back({});
      previous.reset();
    }
    const auto t1 = std::chrono::steady_clock::now();
    metrics.max_step_seconds =
        std::max(metrics.max_step_seconds, std::chrono::duration<double>(t1 - t0).count());

    state = nonlinear_step(state, input, scenario.limits);
    metrics.trajectory.push_back(state);
    metrics.steps_used = step + 1;

    if ((state.position() - scenario.goal.position()).norm() <= scenario.goal_tolerance) {
      metrics.reached_goal = true;
      break;
    }
    // Deadlock: no net progress over a sliding window.
    const std::size_t n = metrics.trajectory.size();
    if (n > kDeadlockWindow) {
      const Vec2 then = metrics.trajectory[n - 1 - kDeadlockWindow].position();
      if ((state.position() - then).norm() < kDeadlockProgress) {
        metrics.deadlocked = true;
        break;
      }
    }
  }
  metrics.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_run0).count();

  // Throughput and predicted errors over the recorded trajectory.
  std::vector<Vec2> positions;
  positions.reserve(metrics.trajectory.size());
  for (const auto& s : metrics.trajectory) positions.push_back(s.position());
  for (const auto& sensor : scenario.sensors) {
    const double bits = collected_bits(positions, sensor, scenario.map, scenario.bandwidth_hz,
                                       scenario.slot_seconds);
    metrics.collected_bits_by_sensor[sensor.id] = bits;
    metrics.total_bits += bits;
  }
  double err_sum = 0.0;
  for (const auto& spec : scenario.specs) {
    const double samples = samples_from_bits(spec, metrics.collected_bits_by_sensor);
    const double err = classification_error(spec, samples);
    metrics.predicted_error_by_model[spec.name] = err;
    err_sum += err;
  }
  metrics.mean_error = scenario.specs.empty() ? 0.0 : err_sum / static_cast<double>(scenario.specs.size());

  // Executed clearance against the real polytopes, for every scheme.
  metrics.min_obstacle_distance = std::numeric_limits<double>::infinity();
  for (const auto& s : metrics.trajectory) {
    const ConvexPolytope placed = occupied_region(scenario.robot_shape, s);
    for (const auto& o : scenario.obstacles) {
      const ConvexPolytope obstacle = occupied_region(o.shape, o.pose);
      metrics.min_obstacle_distance =
          std::min(metrics.min_obstacle_distance, min_distance(obstacle, placed).distance);
    }
  }
  if (scenario.obstacles.empty()) metrics.min_obstacle_distance = 0.0;
  return metrics;
}

ComparisonReport compare(const Scenario& scenario, const std::vector<SchemeId>& schemes,
                         std::uint64_t seed) {
  if (schemes.size() < 2) {
    throw ValidationError("compare needs at least two schemes");
  }
  ComparisonReport report;
  report.scenario_name = scenario.name;
  for (SchemeId s : schemes) report.runs.push_back(run(scenario, s, seed));
  return report;
}

std::string metrics_json(const ComparisonReport& report) {
  nlohmann::ordered_json doc;
  doc["scenario"] = report.scenario_name;
  doc["schemes"] = nlohmann::ordered_json::array();
  for (const auto& m : report.runs) {
    nlohmann::ordered_json r;
    r["scheme"] = m.scheme;
    r["seed"] = m.seed;
    r["reached_goal"] = m.reached_goal;
    r["deadlocked"] = m.deadlocked;
    r["steps_used"] = m.steps_used;
    r["min_obstacle_distance"] = m.min_obstacle_distance;
    nlohmann::ordered_json bits;
    for (const auto& [id, b] : m.collected_bits_by_sensor) bits[std::to_string(id)] = b;
    r["collected_bits"] = bits;
    r["total_bits"] = m.total_bits;
    nlohmann::ordered_json err;
    for (const auto& [name, e] : m.predicted_error_by_model) err[name] = e;
    r["predicted_error"] = err;
    r["mean_error"] = m.mean_error;
    r["mm_iterations"] = m.mm_iterations;
    r["flagged_steps"] = m.flagged_steps;
    r["planner_errors"] = m.planner_errors;
    nlohmann::ordered_json traj = nlohmann::ordered_json::array();
    for (const auto& s : m.trajectory) traj.push_back({s.x, s.y, s.theta});
    r["trajectory"] = traj;
    doc["schemes"].push_back(r);
  }
  return doc.dump(2) + "\n";
}

std::string metrics_csv(const ComparisonReport& report) {
  std::ostringstream out;
  // Column set derived from the first run (all runs share the scenario).
  out << "scheme,reached_goal,deadlocked,steps_used,min_obstacle_distance,total_bits,mean_error";
  if (!report.runs.empty()) {
    for (const auto& [id, b] : report.runs.front().collected_bits_by_sensor) {
      out << ",bits_sensor_" << id;
    }
    for (const auto& [name, e] : report.runs.front().predicted_error_by_model) {
      out << ",error_" << name;
    }
  }
  out << ",flagged_steps\n";
  for (const auto& m : report.runs) {
    out << m.scheme << ',' << (m.reached_goal ? 1 : 0) << ',' << (m.deadlocked ? 1 : 0) << ','
        << m.steps_used << ',' << fmt(m.min_obstacle_distance) << ',' << fmt(m.total_bits) << ','
        << fmt(m.mean_error);
    for (const auto& [id, b] : m.collected_bits_by_sensor) out << ',' << fmt(b);
    for (const auto& [name, e] : m.predicted_error_by_model) out << ',' << fmt(e);
    out << ',' << m.flagged_steps.size() << '\n';
  }
  return out.str();
}

void write_metrics(const ComparisonReport& report, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& content) {
    const std::string path = out_dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
  };
  write("metrics.json", metrics_json(report));
  write("metrics.csv", metrics_csv(report));
}

std::string format_comparison_table(const ComparisonReport& report) {
  std::ostringstream out;
  out << "scenario: " << report.scenario_name << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %-8s %-6s %-12s %-14s %-12s\n", "scheme", "goal",
                "steps", "min_dist", "total_bits", "mean_error");
  out << line;
  for (const auto& m : report.runs) {
    std::snprintf(line, sizeof(line), "%-10s %-8s %-6d %-12.4f %-14.4g %-12.6f\n",
                  m.scheme.c_str(), m.reached_goal ? "yes" : (m.deadlocked ? "deadlock" : "no"),
                  m.steps_used, m.min_obstacle_distance, m.total_bits, m.mean_error);
    out << line;
  }
  return out.str();
}

}  // namespace cldnav
