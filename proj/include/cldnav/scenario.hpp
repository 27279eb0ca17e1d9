#pragma once

#include <string>
#include <vector>

#include "cldnav/planner.hpp"

namespace cldnav {

struct Workspace {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  bool contains(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
};

struct ObstacleSpec {
  ConvexPolytope shape;  // body frame
  RobotState pose;
};

/// A fully validated simulation scenario (units converted at load: angles to
/// radians, powers to watts).
struct Scenario {
  std::string name;
  int version = 1;
  Workspace workspace;
  ConvexPolytope robot_shape;
  RobotState start;
  RobotState goal;
  MotionLimits limits;  // step mirrors slot_seconds
  std::vector<ObstacleSpec> obstacles;
  std::vector<Sensor> sensors;
  ChannelMap map;
  std::vector<ModelSpec> specs;
  double bandwidth_hz = 1e5;
  double slot_seconds = 0.2;
  ReferencePath reference;
  PlannerConfig planner;
  int max_steps = 400;
  double goal_tolerance = 0.3;
  double start_perturbation = 0.0;  // meters; > 0 enables seeded start jitter
};

/// Fixed scheme set reproducing the comparison axes: the full planner (CLD),
/// tracking-only (RDA), tracking+communication (RDA_COMMU), and the
/// point-mass emulation with communication (PMM_COMMU).
enum class SchemeId { CLD, RDA, RDA_COMMU, PMM_COMMU };

std::string to_string(SchemeId scheme);
SchemeId scheme_from_string(const std::string& text);

/// Loads and validates a scenario file. Throws ParseError on malformed JSON
/// (with position) and ValidationError naming the offending field/invariant.
Scenario load_scenario(const std::string& path);

/// Same, from an in-memory JSON document.
Scenario parse_scenario(const std::string& json_text, const std::string& name);

/// Applies the scheme's weight/shape toggles and places the obstacles.
Environment make_environment(const Scenario& scenario, SchemeId scheme);

/// Planner weights after a scheme's toggles.
PlannerConfig scheme_config(const Scenario& scenario, SchemeId scheme);

}  // namespace cldnav
