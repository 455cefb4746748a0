#pragma once

/**
 * Scenario configuration: a single JSON file describing world, sensor,
 * motion noise, prior-mapping trajectory, planning parameters, and outputs.
 * Parsing collects field-level diagnostics into ConfigError; all seeds must
 * be explicit so every run is reproducible from its config alone.
 */

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpplan/errors.hpp"
#include "mpplan/gaussian_belief.hpp"
#include "mpplan/planner.hpp"
#include "mpplan/prm.hpp"
#include "mpplan/slam_sim.hpp"

namespace mpplan {

using nlohmann::json;

namespace cfgdetail {

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError("missing required field '" + path + "'");
  return j.at(key);
}

template <typename T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + path + "' has the wrong type");
  }
}

template <typename T>
T req(const json& j, const std::string& key, const std::string& path) {
  return get_as<T>(require(j, key, path + "." + key), path + "." + key);
}

template <typename T>
T opt(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get_as<T>(j.at(key), path + "." + key);
}

inline Vec2 vec2(const json& j, const std::string& path) {
  const auto v = get_as<std::vector<double>>(j, path);
  if (v.size() != 2) throw ConfigError("field '" + path + "' must be [x, y]");
  return {v[0], v[1]};
}

inline double deg2rad(double d) { return d * 3.141592653589793238462643 / 180.0; }

}  // namespace cfgdetail

struct TrajectorySpec {
  std::string kind;  // "line" | "loop" | "waypoints"
  Vec2 from = Vec2::Zero(), to = Vec2::Zero();   // line
  Vec2 center = Vec2::Zero();                    // loop
  double radius = 0.0;
  double start_angle = 0.0;
  int poses = 0;
  std::vector<Vec2> points;                      // waypoints
};

struct ScenarioConfig {
  // world
  Rect bounds;
  int landmark_count = 0;
  std::vector<Polygon> obstacles;
  std::uint64_t world_seed = 0;

  // sensor
  double max_range = 10.0;
  double fov = 6.283185307179586476925287;
  double sigma_range = 0.1;
  double sigma_bearing = 0.017453292519943295;

  // motion noise
  double sigma_xy = 0.05;
  double sigma_theta = 0.008726646259971648;

  // prior mapping
  TrajectorySpec trajectory;
  double anchor_sigma = 1e-3;
  double keep_fraction = 1.0;
  std::uint64_t prior_seed = 0;

  // planning
  int path_count = 100;
  int prm_samples = 300;
  int prm_k_nearest = 8;
  std::optional<Pose2> start;  // default: final prior pose
  Vec2 goal = Vec2::Zero();
  int partition_depth = 1;
  SplitStrategy strategy = SplitStrategy::seeded_random;
  Backend backend = Backend::ramdl;
  Objective objective = Objective::final_step;
  double alpha = 0.0;
  int refine_budget = 0;
  bool exact_eval = true;
  std::uint64_t planning_seed = 0;

  int replan_steps = 1;
  std::string output_dir = "out";
  json sweep;  // optional per-sweep parameters
  json echo;   // the parsed source, embedded in reports

  SensorSpec sensor_spec() const {
    SensorSpec s;
    s.max_range = max_range;
    s.fov = fov;
    s.noise = Eigen::Vector2d(sigma_range * sigma_range, sigma_bearing * sigma_bearing)
                  .asDiagonal();
    return s;
  }

  MotionSpec motion_spec() const {
    Eigen::Matrix3d w = Eigen::Vector3d(sigma_xy * sigma_xy, sigma_xy * sigma_xy,
                                        sigma_theta * sigma_theta)
                            .asDiagonal();
    return planar_odometry(w);
  }

  WorldConfig world_config() const { return {bounds, landmark_count, obstacles}; }

  PrmParams prm_params() const { return {prm_samples, prm_k_nearest, planning_seed}; }

  PlanConfig plan_config() const {
    PlanConfig p;
    p.partition_depth = partition_depth;
    p.strategy = strategy;
    p.partition_seed = mix_seed(planning_seed, 0x7041525449ull);
    p.backend = backend;
    p.objective = objective;
    p.alpha = alpha;
    p.goal = goal;
    p.refine_budget = refine_budget;
    p.exact_eval = exact_eval;
    return p;
  }

  std::vector<Pose2> trajectory_poses() const {
    std::vector<Pose2> out;
    if (trajectory.kind == "line") {
      const int n = trajectory.poses;
      for (int i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        const Vec2 p = trajectory.from + t * (trajectory.to - trajectory.from);
        const Vec2 d = trajectory.to - trajectory.from;
        out.push_back({p.x(), p.y(), std::atan2(d.y(), d.x())});
      }
    } else if (trajectory.kind == "loop") {
      const int n = trajectory.poses;
      for (int i = 0; i < n; ++i) {
        const double a = trajectory.start_angle +
                         6.283185307179586476925287 * static_cast<double>(i) / n;
        const Vec2 p = trajectory.center +
                       trajectory.radius * Vec2(std::cos(a), std::sin(a));
        out.push_back({p.x(), p.y(), wrap_angle(a + 1.5707963267948966)});
      }
    } else {
      for (std::size_t i = 0; i < trajectory.points.size(); ++i) {
        const Vec2& p = trajectory.points[i];
        const Vec2 d = i + 1 < trajectory.points.size()
                           ? Vec2(trajectory.points[i + 1] - p)
                           : Vec2(p - trajectory.points[i - 1]);
        out.push_back({p.x(), p.y(), std::atan2(d.y(), d.x())});
      }
    }
    return out;
  }
};

inline ScenarioConfig parse_scenario(const json& j) {
  using namespace cfgdetail;
  ScenarioConfig c;
  c.echo = j;

  const json& world = require(j, "world", "");
  const auto b = req<std::vector<double>>(world, "bounds", "world");
  if (b.size() != 4) throw ConfigError("world.bounds must be [xmin, ymin, xmax, ymax]");
  c.bounds = {b[0], b[1], b[2], b[3]};
  c.landmark_count = req<int>(world, "landmark_count", "world");
  if (c.landmark_count < 0) throw ConfigError("world.landmark_count must be >= 0");
  c.world_seed = req<std::uint64_t>(world, "seed", "world");
  if (world.contains("obstacles")) {
    for (const json& poly : world.at("obstacles")) {
      Polygon p;
      for (const json& v : poly) p.push_back(vec2(v, "world.obstacles[]"));
      c.obstacles.push_back(std::move(p));
    }
  }

  const json& sensor = require(j, "sensor", "");
  c.max_range = req<double>(sensor, "max_range", "sensor");
  c.fov = deg2rad(opt<double>(sensor, "fov_deg", "sensor", 360.0));
  c.sigma_range = req<double>(sensor, "sigma_range", "sensor");
  c.sigma_bearing = deg2rad(req<double>(sensor, "sigma_bearing_deg", "sensor"));
  if (c.max_range <= 0 || c.sigma_range <= 0 || c.sigma_bearing <= 0)
    throw ConfigError("sensor parameters must be positive");

  const json& motion = require(j, "motion", "");
  c.sigma_xy = req<double>(motion, "sigma_xy", "motion");
  c.sigma_theta = deg2rad(req<double>(motion, "sigma_theta_deg", "motion"));
  if (c.sigma_xy <= 0 || c.sigma_theta <= 0)
    throw ConfigError("motion noise must be positive");

  const json& prior = require(j, "prior", "");
  c.prior_seed = req<std::uint64_t>(prior, "seed", "prior");
  c.anchor_sigma = opt<double>(prior, "anchor_sigma", "prior", 1e-3);
  c.keep_fraction = opt<double>(prior, "keep_fraction", "prior", 1.0);
  if (c.keep_fraction <= 0.0 || c.keep_fraction > 1.0)
    throw ConfigError("prior.keep_fraction must be in (0, 1]");
  const json& traj = require(prior, "trajectory", "prior");
  c.trajectory.kind = req<std::string>(traj, "kind", "prior.trajectory");
  if (c.trajectory.kind == "line") {
    c.trajectory.from = vec2(require(traj, "from", "prior.trajectory"), "prior.trajectory.from");
    c.trajectory.to = vec2(require(traj, "to", "prior.trajectory"), "prior.trajectory.to");
    c.trajectory.poses = req<int>(traj, "poses", "prior.trajectory");
  } else if (c.trajectory.kind == "loop") {
    c.trajectory.center =
        vec2(require(traj, "center", "prior.trajectory"), "prior.trajectory.center");
    c.trajectory.radius = req<double>(traj, "radius", "prior.trajectory");
    c.trajectory.poses = req<int>(traj, "poses", "prior.trajectory");
    c.trajectory.start_angle =
        deg2rad(opt<double>(traj, "start_angle_deg", "prior.trajectory", 0.0));
  } else if (c.trajectory.kind == "waypoints") {
    for (const json& v : require(traj, "points", "prior.trajectory"))
      c.trajectory.points.push_back(vec2(v, "prior.trajectory.points[]"));
    if (c.trajectory.points.size() < 2)
      throw ConfigError("prior.trajectory.points needs at least two points");
    c.trajectory.poses = static_cast<int>(c.trajectory.points.size());
  } else {
    throw ConfigError("prior.trajectory.kind must be line, loop, or waypoints");
  }
  if (c.trajectory.poses < 1) throw ConfigError("prior.trajectory.poses must be >= 1");

  const json& planning = require(j, "planning", "");
  c.planning_seed = req<std::uint64_t>(planning, "seed", "planning");
  c.path_count = req<int>(planning, "path_count", "planning");
  if (c.path_count < 1) throw ConfigError("planning.path_count must be >= 1");
  c.prm_samples = opt<int>(planning, "prm_samples", "planning", 300);
  c.prm_k_nearest = opt<int>(planning, "prm_k_nearest", "planning", 8);
  c.goal = vec2(require(planning, "goal", "planning"), "planning.goal");
  if (planning.contains("start")) {
    const auto v = get_as<std::vector<double>>(planning.at("start"), "planning.start");
    if (v.size() != 3) throw ConfigError("planning.start must be [x, y, theta_deg]");
    c.start = Pose2{v[0], v[1], deg2rad(v[2])};
  }
  c.partition_depth = opt<int>(planning, "partition_depth", "planning", 1);
  if (c.partition_depth < 0) throw ConfigError("planning.partition_depth must be >= 0");
  const std::string strat =
      opt<std::string>(planning, "strategy", "planning", "seeded-random");
  if (strat == "seeded-random")
    c.strategy = SplitStrategy::seeded_random;
  else if (strat == "contiguous")
    c.strategy = SplitStrategy::contiguous;
  else if (strat == "interleaved")
    c.strategy = SplitStrategy::interleaved;
  else
    throw ConfigError("planning.strategy must be seeded-random, contiguous, or interleaved");
  const std::string backend = opt<std::string>(planning, "backend", "planning", "ramdl");
  if (backend == "dense")
    c.backend = Backend::dense;
  else if (backend == "ramdl")
    c.backend = Backend::ramdl;
  else
    throw ConfigError("planning.backend must be dense or ramdl");
  const std::string objective =
      opt<std::string>(planning, "objective", "planning", "final-step");
  if (objective == "final-step")
    c.objective = Objective::final_step;
  else if (objective == "horizon-sum")
    c.objective = Objective::horizon_sum;
  else
    throw ConfigError("planning.objective must be final-step or horizon-sum");
  c.alpha = opt<double>(planning, "alpha", "planning", 0.0);
  c.refine_budget = opt<int>(planning, "refine_budget", "planning", 0);
  c.exact_eval = opt<bool>(planning, "exact_eval", "planning", true);

  c.replan_steps = opt<int>(j, "replan_steps", "", 1);
  if (c.replan_steps < 1) throw ConfigError("replan_steps must be >= 1");
  c.output_dir = opt<std::string>(j, "output_dir", "", "out");
  if (j.contains("sweep")) c.sweep = j.at("sweep");
  return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return parse_scenario(j);
}

}  // namespace mpplan
