#include "cldnav/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cldnav/errors.hpp"

namespace cldnav {

namespace {

using json = nlohmann::json;

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

const json& require(const json& j, const std::string& key, const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ValidationError("missing field '" + key + "' in " + context);
  }
  return *it;
}

double require_number(const json& j, const std::string& key, const std::string& context) {
  const json& v = require(j, key, context);
  if (!v.is_number()) {
    throw ValidationError("field '" + key + "' in " + context + " must be a number");
  }
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<double>();
}

ConvexPolytope parse_polytope(const json& j, const std::string& context) {
  if (j.contains("vertices")) {
    std::vector<Vec2> verts;
    for (const auto& v : j.at("vertices")) {
      if (!v.is_array() || v.size() != 2) {
        throw ValidationError("vertex in " + context + " must be [x, y]");
      }
      verts.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    try {
      return ConvexPolytope::from_vertices(verts);
    } catch (const ValidationError& e) {
      throw ValidationError(context + ": " + e.what());
    }
  }
  if (j.contains("G") && j.contains("g")) {
    const auto& G = j.at("G");
    const auto& g = j.at("g");
    Eigen::MatrixX2d normals(G.size(), 2);
    Eigen::VectorXd offsets(g.size());
    for (std::size_t i = 0; i < G.size(); ++i) {
      normals(static_cast<Eigen::Index>(i), 0) = G[i][0].get<double>();
      normals(static_cast<Eigen::Index>(i), 1) = G[i][1].get<double>();
    }
    for (std::size_t i = 0; i < g.size(); ++i) offsets[static_cast<Eigen::Index>(i)] = g[i].get<double>();
    try {
      return ConvexPolytope::from_halfspaces(normals, offsets);
    } catch (const ValidationError& e) {
      throw ValidationError(context + ": " + e.what());
    }
  }
  throw ValidationError(context + " needs either 'vertices' or ('G', 'g')");
}

RobotState parse_pose(const json& j, const std::string& context) {
  RobotState s;
  s.x = require_number(j, "x", context);
  s.y = require_number(j, "y", context);
  if (j.contains("theta_deg")) {
    s.theta = j.at("theta_deg").get<double>() * kDegToRad;
  } else {
    s.theta = number_or(j, "theta_rad", 0.0);
  }
  return s;
}

double parse_power_watts(const json& j, const std::string& context) {
  if (j.contains("power_watts")) return j.at("power_watts").get<double>();
  if (j.contains("power_dbm")) return dbm_to_watts(j.at("power_dbm").get<double>());
  throw ValidationError(context + " needs 'power_watts' or 'power_dbm'");
}

Scenario parse_document(const json& doc, const std::string& name) {
  Scenario sc;
  sc.name = name;
  sc.version = doc.value("version", 1);

  const json& ws = require(doc, "workspace", "scenario");
  sc.workspace = {require_number(ws, "x_min", "workspace"), require_number(ws, "x_max", "workspace"),
                  require_number(ws, "y_min", "workspace"), require_number(ws, "y_max", "workspace")};

  const json& robot = require(doc, "robot", "scenario");
  sc.robot_shape = parse_polytope(require(robot, "shape", "robot"), "robot shape");
  sc.start = parse_pose(require(robot, "start", "robot"), "robot start");
  sc.goal = parse_pose(require(robot, "goal", "robot"), "robot goal");

  sc.slot_seconds = require_number(doc, "slot_seconds", "scenario");
  sc.bandwidth_hz = require_number(doc, "bandwidth_hz", "scenario");
  if (sc.slot_seconds <= 0.0) throw ValidationError("slot_seconds must be positive");
  if (sc.bandwidth_hz <= 0.0) throw ValidationError("bandwidth_hz must be positive");

  const json& lim = require(robot, "limits", "robot");
  sc.limits.u_min = {require_number(lim, "v_min", "limits"),
                     require_number(lim, "psi_min_deg", "limits") * kDegToRad};
  sc.limits.u_max = {require_number(lim, "v_max", "limits"),
                     require_number(lim, "psi_max_deg", "limits") * kDegToRad};
  sc.limits.a_min = {require_number(lim, "dv_min", "limits"),
                     require_number(lim, "dpsi_min_deg", "limits") * kDegToRad};
  sc.limits.a_max = {require_number(lim, "dv_max", "limits"),
                     require_number(lim, "dpsi_max_deg", "limits") * kDegToRad};
  sc.limits.wheelbase = require_number(robot, "wheelbase", "robot");
  sc.limits.step = sc.slot_seconds;

  for (const auto& o : doc.value("obstacles", json::array())) {
    ObstacleSpec spec{parse_polytope(require(o, "shape", "obstacle"), "obstacle shape"),
                      parse_pose(require(o, "pose", "obstacle"), "obstacle pose")};
    sc.obstacles.push_back(std::move(spec));
  }

  std::set<int> sensor_ids;
  for (const auto& s : doc.value("sensors", json::array())) {
    Sensor sensor;
    sensor.id = static_cast<int>(require_number(s, "id", "sensor"));
    sensor.position = {require_number(s, "x", "sensor"), require_number(s, "y", "sensor")};
    sensor.power = parse_power_watts(s, "sensor " + std::to_string(sensor.id));
    if (sensor.power <= 0.0) {
      throw ValidationError("sensor " + std::to_string(sensor.id) + " power must be positive");
    }
    if (!sensor_ids.insert(sensor.id).second) {
      throw ValidationError("duplicate sensor id " + std::to_string(sensor.id));
    }
    sc.sensors.push_back(sensor);
  }

  const json& ch = require(doc, "channel", "scenario");
  double noise = 0.0;
  if (ch.contains("noise_watts")) {
    noise = ch.at("noise_watts").get<double>();
  } else if (ch.contains("noise_dbm")) {
    noise = dbm_to_watts(ch.at("noise_dbm").get<double>());
  } else {
    throw ValidationError("channel needs 'noise_watts' or 'noise_dbm'");
  }
  const json& dflt = require(ch, "default", "channel");
  PathLossParams default_loss{require_number(dflt, "beta", "channel default"),
                              require_number(dflt, "alpha", "channel default")};
  std::vector<SubRegion> regions;
  for (const auto& r : ch.value("regions", json::array())) {
    SubRegion region{parse_polytope(require(r, "boundary", "region"), "region boundary"),
                     {require_number(r, "beta", "region"), require_number(r, "alpha", "region")}};
    const std::string kind = r.value("kind", "nlos");
    if (kind == "los" && (region.loss.alpha < 2.0 || region.loss.alpha > 5.0)) {
      throw ValidationError("line-of-sight region exponent must lie in [2, 5]");
    }
    if (region.loss.alpha > 0.0 && region.loss.alpha < 1.0) {
      throw ValidationError("region path-loss exponent must be 0 or >= 1");
    }
    regions.push_back(std::move(region));
  }
  if (default_loss.alpha > 0.0 && default_loss.alpha < 1.0) {
    throw ValidationError("default path-loss exponent must be 0 or >= 1");
  }
  sc.map = ChannelMap(std::move(regions), noise, default_loss);

  for (const auto& m : doc.value("models", json::array())) {
    ModelSpec spec;
    spec.name = require(m, "name", "model").get<std::string>();
    spec.a = require_number(m, "a", "model " + spec.name);
    spec.b = require_number(m, "b", "model " + spec.name);
    spec.historical_samples = require_number(m, "historical_samples", "model " + spec.name);
    spec.bits_per_sample = require_number(m, "bits_per_sample", "model " + spec.name);
    for (const auto& id : require(m, "sensors", "model " + spec.name)) {
      spec.sensor_group.push_back(id.get<int>());
    }
    validate_model_spec(spec);
    for (int id : spec.sensor_group) {
      if (!sensor_ids.count(id)) {
        throw ValidationError("model '" + spec.name + "' references unknown sensor id " +
                              std::to_string(id));
      }
    }
    sc.specs.push_back(std::move(spec));
  }

  for (const auto& w : require(doc, "reference_path", "scenario")) {
    sc.reference.waypoints.push_back(parse_pose(w, "reference waypoint"));
  }
  validate_reference_path(sc.reference);

  const json& pl = require(doc, "planner", "scenario");
  const json& weights = require(pl, "weights", "planner");
  sc.planner.weights.tracking = require_number(weights, "tracking", "weights");
  sc.planner.weights.communication = require_number(weights, "communication", "weights");
  sc.planner.weights.learning = require_number(weights, "learning", "weights");
  sc.planner.weights.safety = require_number(weights, "safety", "weights");
  sc.planner.horizon = static_cast<int>(require_number(pl, "horizon", "planner"));
  sc.planner.d_min = require_number(pl, "d_min", "planner");
  sc.planner.d_max = require_number(pl, "d_max", "planner");
  sc.planner.mm_tolerance = require_number(pl, "mm_tolerance", "planner");
  sc.planner.mm_max_iters = static_cast<int>(require_number(pl, "mm_max_iters", "planner"));
  sc.planner.kkt_tolerance = require_number(pl, "kkt_tolerance", "planner");
  sc.planner.reference_speed = require_number(pl, "reference_speed", "planner");
  sc.planner.slack_penalty = number_or(pl, "slack_penalty", sc.planner.slack_penalty);
  sc.planner.safety_margin = number_or(pl, "safety_margin", sc.planner.safety_margin);
  sc.planner.slack_tolerance = number_or(pl, "slack_tolerance", sc.planner.slack_tolerance);
  validate_config(sc.planner);

  sc.max_steps = static_cast<int>(number_or(doc, "max_steps", 400));
  sc.goal_tolerance = number_or(doc, "goal_tolerance", 0.3);
  sc.start_perturbation = number_or(doc, "start_perturbation", 0.0);
  if (sc.max_steps < 1) throw ValidationError("max_steps must be >= 1");
  if (sc.goal_tolerance <= 0.0) throw ValidationError("goal_tolerance must be positive");

  // Cross-field invariants.
  if (!sc.workspace.contains(sc.start.position())) {
    throw ValidationError("start pose lies outside the workspace");
  }
  if (!sc.workspace.contains(sc.goal.position())) {
    throw ValidationError("goal pose lies outside the workspace");
  }
  for (std::size_t m = 0; m < sc.obstacles.size(); ++m) {
    const ConvexPolytope placed = occupied_region(sc.obstacles[m].shape, sc.obstacles[m].pose);
    if (placed.contains(sc.start.position())) {
      throw ValidationError("obstacle " + std::to_string(m) + " contains the start pose");
    }
  }
  return sc;
}

}  // namespace

std::string to_string(SchemeId scheme) {
  switch (scheme) {
    case SchemeId::CLD: return "cld";
    case SchemeId::RDA: return "rda";
    case SchemeId::RDA_COMMU: return "rda_commu";
    case SchemeId::PMM_COMMU: return "pmm_commu";
  }
  return "unknown";
}

SchemeId scheme_from_string(const std::string& text) {
  if (text == "cld") return SchemeId::CLD;
  if (text == "rda") return SchemeId::RDA;
  if (text == "rda_commu") return SchemeId::RDA_COMMU;
  if (text == "pmm_commu") return SchemeId::PMM_COMMU;
  throw ValidationError("unknown scheme '" + text + "' (use cld, rda, rda_commu, pmm_commu)");
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), std::filesystem::path(path).stem().string());
}

Scenario parse_scenario(const std::string& json_text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("scenario JSON parse error at byte " + std::to_string(e.byte) + ": " +
                     e.what());
  }
  try {
    return parse_document(doc, name);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario field error: ") + e.what());
  }
}

PlannerConfig scheme_config(const Scenario& scenario, SchemeId scheme) {
  PlannerConfig cfg = scenario.planner;
  switch (scheme) {
    case SchemeId::CLD:
      break;
    case SchemeId::RDA:
      cfg.weights.communication = 0.0;
      cfg.weights.learning = 0.0;
      break;
    case SchemeId::RDA_COMMU:
    case SchemeId::PMM_COMMU:
      cfg.weights.learning = 0.0;
      break;
  }
  return cfg;
}

Environment make_environment(const Scenario& scenario, SchemeId scheme) {
  Environment env{scenario.robot_shape,
                  {},
                  {},
                  scenario.sensors,
                  scenario.map,
                  scenario.specs,
                  scenario.bandwidth_hz,
                  scenario.slot_seconds,
                  scenario.limits,
                  scenario.reference,
                  scheme == SchemeId::PMM_COMMU};
  for (const auto& o : scenario.obstacles) {
    env.obstacles.push_back(occupied_region(o.shape, o.pose));
    env.obstacle_centers.push_back(o.pose.position());
  }
  return env;
}

}  // namespace cldnav
