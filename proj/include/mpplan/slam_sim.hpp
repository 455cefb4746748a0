#pragma once

/**
 * 2D planar active-SLAM scenario generation: world sampling, prior mapping,
 * range-bearing sensing with deterministic data association, and assembly of
 * the propagated belief plus collective Jacobian for a candidate path.
 *
 * Measurements are range and bearing to point landmarks,
 *   h(x, l) = ( ||l - p||, wrap(atan2(l - p) - theta) ),
 * whitened by V^{-1/2}. Planning uses maximum-likelihood observations, so
 * Jacobians depend only on the data association. Everything is reproducible
 * bit-exactly from (config, seed).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mpplan/collective_jacobian.hpp"
#include "mpplan/entropy_bounds.hpp"
#include "mpplan/errors.hpp"
#include "mpplan/gaussian_belief.hpp"
#include "mpplan/rng.hpp"

namespace mpplan {

using Vec2 = Eigen::Vector2d;
using Polygon = std::vector<Vec2>;

struct Rect {
  double xmin = 0.0, ymin = 0.0, xmax = 1.0, ymax = 1.0;

  bool contains(const Vec2& p) const {
    return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
  }
};

// ---------------------------------------------------------------------------
// Planar geometry
// ---------------------------------------------------------------------------

namespace geom {

inline bool point_in_polygon(const Vec2& p, const Polygon& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    const bool crosses = (a.y() > p.y()) != (b.y() > p.y());
    if (crosses) {
      const double x_at = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x_at) inside = !inside;
    }
  }
  return inside;
}

inline double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

inline bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double o1 = orient(a, b, c);
  const double o2 = orient(a, b, d);
  const double o3 = orient(c, d, a);
  const double o4 = orient(c, d, b);
  if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 &&
      o4 != 0)
    return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

inline bool segment_hits_polygon(const Vec2& a, const Vec2& b, const Polygon& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++)
    if (segments_intersect(a, b, poly[j], poly[i])) return true;
  return point_in_polygon(a, poly) || point_in_polygon(b, poly);
}

inline bool point_free(const Vec2& p, const std::vector<Polygon>& obstacles) {
  for (const Polygon& o : obstacles)
    if (point_in_polygon(p, o)) return false;
  return true;
}

inline bool segment_free(const Vec2& a, const Vec2& b, const std::vector<Polygon>& obstacles) {
  for (const Polygon& o : obstacles)
    if (segment_hits_polygon(a, b, o)) return false;
  return true;
}

}  // namespace geom

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

struct WorldConfig {
  Rect bounds;
  int landmark_count = 0;
  std::vector<Polygon> obstacles;
};

struct World {
  std::vector<Vec2> landmarks;  // landmark id == index
  std::vector<Polygon> obstacles;
  Rect bounds;
  std::uint64_t seed = 0;
};

inline World generate_world(const WorldConfig& cfg, std::uint64_t seed) {
  if (cfg.landmark_count < 0) throw InfeasibleConfig("negative landmark count");
  if (cfg.bounds.xmax <= cfg.bounds.xmin || cfg.bounds.ymax <= cfg.bounds.ymin)
    throw InfeasibleConfig("degenerate world bounds");
  for (const Polygon& o : cfg.obstacles) {
    if (o.size() < 3) throw InfeasibleConfig("obstacle polygon needs at least 3 vertices");
    for (const Vec2& v : o)
      if (!cfg.bounds.contains(v)) throw InfeasibleConfig("obstacle vertex outside bounds");
  }

  World w;
  w.bounds = cfg.bounds;
  w.obstacles = cfg.obstacles;
  w.seed = seed;
  Rng rng(mix_seed(seed, 0x574f524c44ull));
  w.landmarks.reserve(static_cast<std::size_t>(cfg.landmark_count));
  for (int i = 0; i < cfg.landmark_count; ++i) {
    Vec2 p;
    int attempts = 0;
    do {
      p = Vec2(rng.uniform(cfg.bounds.xmin, cfg.bounds.xmax),
               rng.uniform(cfg.bounds.ymin, cfg.bounds.ymax));
      if (++attempts > 10000)
        throw InfeasibleConfig("could not place landmark outside obstacles");
    } while (!geom::point_free(p, w.obstacles));
    w.landmarks.push_back(p);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Sensor
// ---------------------------------------------------------------------------

struct SensorSpec {
  double max_range = 10.0;
  double fov = 6.283185307179586476925287;  // radians; 2*pi = omnidirectional
  Eigen::Matrix2d noise = Eigen::Matrix2d::Identity();  // V (range, bearing)
};

/// z = (range, bearing) of a landmark from a pose.
inline Eigen::Vector2d range_bearing(const Pose2& x, const Vec2& lm) {
  const Vec2 d(lm.x() - x.x, lm.y() - x.y);
  return {d.norm(), wrap_angle(std::atan2(d.y(), d.x()) - x.theta)};
}

inline void range_bearing_jacobians(const Pose2& x, const Vec2& lm,
                                    Eigen::Matrix<double, 2, 3>& h_pose,
                                    Eigen::Matrix2d& h_lm) {
  const Vec2 d(lm.x() - x.x, lm.y() - x.y);
  const double q = d.squaredNorm();
  const double r = std::sqrt(q);
  h_pose << -d.x() / r, -d.y() / r, 0.0,
             d.y() / q, -d.x() / q, -1.0;
  h_lm <<  d.x() / r,  d.y() / r,
          -d.y() / q,  d.x() / q;
}

/// Landmark position from one range-bearing reading at a pose.
inline Vec2 invert_range_bearing(const Pose2& x, const Eigen::Vector2d& z) {
  const double dir = x.theta + z(1);
  return {x.x + z(0) * std::cos(dir), x.y + z(0) * std::sin(dir)};
}

inline bool visible(const Pose2& x, const Vec2& lm, const SensorSpec& sensor) {
  const Eigen::Vector2d z = range_bearing(x, lm);
  if (z(0) > sensor.max_range || z(0) <= 0.0) return false;
  return std::abs(z(1)) <= 0.5 * sensor.fov + 1e-12;
}

// ---------------------------------------------------------------------------
// Data association
// ---------------------------------------------------------------------------

/// Per lookahead step, the landmark ids observed (the beta vector in set
/// form). Ids must exist in the belief or be newly initialized at that step.
struct DataAssociation {
  std::vector<std::vector<std::uint32_t>> per_step;

  int step_count() const { return static_cast<int>(per_step.size()); }
  int measurement_count() const {
    int n = 0;
    for (const auto& s : per_step) n += static_cast<int>(s.size());
    return n;
  }
};

// ---------------------------------------------------------------------------
// Candidate paths
// ---------------------------------------------------------------------------

struct CandidatePath {
  std::vector<Vec2> waypoints;   // first = start position, last = goal
  std::vector<Pose2> poses;      // one per waypoint; heading along travel
  std::vector<Action2> actions;  // one per edge, body-frame relative motions
  double length = 0.0;
};

/// Body-frame motion taking pose a to pose b.
inline Action2 relative_action(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  const double dx = b.x - a.x, dy = b.y - a.y;
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(b.theta - a.theta)};
}

inline CandidatePath make_path(const Pose2& start, std::span<const Vec2> waypoints) {
  if (waypoints.size() < 2) throw InfeasibleConfig("path needs at least two waypoints");
  CandidatePath p;
  p.waypoints.assign(waypoints.begin(), waypoints.end());
  p.poses.push_back(start);
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Vec2 d = waypoints[i] - waypoints[i - 1];
    p.poses.push_back({waypoints[i].x(), waypoints[i].y(), std::atan2(d.y(), d.x())});
    p.length += d.norm();
  }
  for (std::size_t i = 1; i < p.poses.size(); ++i)
    p.actions.push_back(relative_action(p.poses[i - 1], p.poses[i]));
  return p;
}

// ---------------------------------------------------------------------------
// Prior mapping
// ---------------------------------------------------------------------------

struct PriorOptions {
  double anchor_sigma = 1e-3;
  double keep_fraction = 1.0;  // measurement-factor retention (density sweeps)
  std::uint64_t prune_salt = 0;
};

struct PriorMappingResult {
  GaussianBelief belief;
  int factor_count = 0;
  int measurement_factor_count = 0;
  std::vector<Pose2> true_poses;
  std::vector<std::uint32_t> mapped_landmarks;
};

namespace detail {

/// Nested factor retention: a factor kept at fraction f stays kept at f' > f.
inline bool keep_factor(std::uint64_t salt, int pose, std::uint32_t lm, double fraction) {
  if (fraction >= 1.0) return true;
  Rng rng(mix_seed(salt, static_cast<std::uint64_t>(pose), lm));
  return rng.next_double() <= fraction;
}

}  // namespace detail

/// Accumulate linearized motion and measurement factors along a ground-truth
/// trajectory with noisy simulated measurements, then take one linear solve
/// for the MAP linearization point. The first pose carries an anchor prior.
inline PriorMappingResult prior_mapping(const World& world, std::span<const Pose2> trajectory,
                                        const MotionSpec& motion, const SensorSpec& sensor,
                                        std::uint64_t seed, const PriorOptions& opt = {}) {
  if (trajectory.empty()) throw InfeasibleConfig("prior trajectory is empty");
  for (const Pose2& p : trajectory)
    if (!world.bounds.contains(Vec2(p.x, p.y)))
      throw InfeasibleConfig("prior trajectory leaves the world bounds");

  const int pose_count = static_cast<int>(trajectory.size());
  const Eigen::MatrixXd v_whiten = whitener(sensor.noise, "measurement");

  // Simulate noisy sightings; one RNG stream per (pose, landmark) pair so that
  // factor pruning does not shift other draws.
  struct Sight {
    int pose;
    std::uint32_t lm;
    Eigen::Vector2d z;
  };
  std::vector<Sight> sights;
  std::vector<std::uint32_t> mapped;
  for (int i = 0; i < pose_count; ++i) {
    for (std::uint32_t l = 0; l < world.landmarks.size(); ++l) {
      if (!visible(trajectory[i], world.landmarks[l], sensor)) continue;
      if (!detail::keep_factor(opt.prune_salt, i, l, opt.keep_fraction)) continue;
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i), l));
      Eigen::Vector2d noise;
      noise << rng.normal(), rng.normal();
      const Eigen::LLT<Eigen::Matrix2d> vllt(sensor.noise);
      Eigen::Vector2d z = range_bearing(trajectory[i], world.landmarks[l]);
      z += vllt.matrixL() * noise;
      z(0) = std::max(z(0), 1e-6);  // a range sensor never reads negative
      z(1) = wrap_angle(z(1));
      sights.push_back({i, l, z});
      mapped.push_back(l);
    }
  }
  std::sort(mapped.begin(), mapped.end());
  mapped.erase(std::unique(mapped.begin(), mapped.end()), mapped.end());

  // Layout: poses 0..P-1 then mapped landmarks in id order.
  std::vector<VariableKey> keys;
  for (int i = 0; i < pose_count; ++i) keys.push_back(pose_key(static_cast<std::uint32_t>(i)));
  for (std::uint32_t l : mapped) keys.push_back(landmark_key(l));
  VariableIndexMap index(std::move(keys));
  const int n = index.dim();

  Eigen::VectorXd lin = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < pose_count; ++i) {
    lin[3 * i] = trajectory[i].x;
    lin[3 * i + 1] = trajectory[i].y;
    lin[3 * i + 2] = trajectory[i].theta;
  }
  for (const std::uint32_t l : mapped) {
    const VariableIndex& v = index.at(landmark_key(l));
    lin.segment(v.offset, 2) = world.landmarks[l];
  }

  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  int factors = 0;

  // Anchor on the first pose.
  const double w_anchor = 1.0 / opt.anchor_sigma;
  for (int k = 0; k < 3; ++k) lambda(k, k) += w_anchor * w_anchor;
  ++factors;

  // Odometry chain linearized at ground truth (zero residuals).
  for (int i = 0; i + 1 < pose_count; ++i) {
    const Action2 a = relative_action(trajectory[i], trajectory[i + 1]);
    const detail::MotionRows rows = detail::motion_rows(motion, trajectory[i], a);
    Eigen::Matrix<double, 3, 6> j;
    j << rows.prev_block, rows.next_block;
    const Eigen::Matrix<double, 6, 6> outer = j.transpose() * j;
    lambda.block<3, 3>(3 * i, 3 * i) += outer.block<3, 3>(0, 0);
    lambda.block<3, 3>(3 * i, 3 * (i + 1)) += outer.block<3, 3>(0, 3);
    lambda.block<3, 3>(3 * (i + 1), 3 * i) += outer.block<3, 3>(3, 0);
    lambda.block<3, 3>(3 * (i + 1), 3 * (i + 1)) += outer.block<3, 3>(3, 3);
    ++factors;
  }

  // Measurement factors; residuals carry the simulated noise.
  for (const Sight& s : sights) {
    const VariableIndex& lv = index.at(landmark_key(s.lm));
    Eigen::Matrix<double, 2, 3> h_pose;
    Eigen::Matrix2d h_lm;
    range_bearing_jacobians(trajectory[s.pose], world.landmarks[s.lm], h_pose, h_lm);
    const Eigen::Matrix<double, 2, 3> wp = v_whiten * h_pose;
    const Eigen::Matrix2d wl = v_whiten * h_lm;
    Eigen::Vector2d res = s.z - range_bearing(trajectory[s.pose], world.landmarks[s.lm]);
    res(1) = wrap_angle(res(1));
    res = v_whiten * res;

    const int po = 3 * s.pose;
    lambda.block<3, 3>(po, po) += wp.transpose() * wp;
    lambda.block<3, 2>(po, lv.offset) += wp.transpose() * wl;
    lambda.block<2, 3>(lv.offset, po) += wl.transpose() * wp;
    lambda.block<2, 2>(lv.offset, lv.offset) += wl.transpose() * wl;
    rhs.segment<3>(po) += wp.transpose() * res;
    rhs.segment<2>(lv.offset) += wl.transpose() * res;
    ++factors;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("prior mapping produced an under-constrained belief");
  const Eigen::VectorXd mean = lin + llt.solve(rhs);

  PriorMappingResult out{
      GaussianBelief(InfoMatrix(std::move(lambda)), mean, std::move(index)),
      factors,
      static_cast<int>(sights.size()),
      std::vector<Pose2>(trajectory.begin(), trajectory.end()),
      std::move(mapped)};
  return out;
}

// ---------------------------------------------------------------------------
// Association prediction
// ---------------------------------------------------------------------------

struct AssocOptions {
  bool include_unmapped_world = false;  // omniscient mode; exercises new landmarks
  const World* world = nullptr;
};

/// For each future pose of the path, the landmark ids within range and field
/// of view of the ML-predicted pose. Deterministic; by default only landmarks
/// already in the belief can be predicted (paths through unmapped terrain
/// produce no future measurements).
inline DataAssociation predict_associations(const GaussianBelief& belief,
                                            const CandidatePath& path,
                                            const SensorSpec& sensor,
                                            const AssocOptions& opt = {}) {
  DataAssociation assoc;
  assoc.per_step.resize(path.actions.size());
  std::vector<std::pair<std::uint32_t, Vec2>> mapped;
  for (const VariableIndex& v : belief.index().vars())
    if (v.key.kind == VarKind::landmark)
      mapped.emplace_back(v.key.num, Vec2(belief.mean()[v.offset], belief.mean()[v.offset + 1]));

  for (std::size_t s = 0; s < path.actions.size(); ++s) {
    const Pose2& pose = path.poses[s + 1];
    std::vector<std::uint32_t>& ids = assoc.per_step[s];
    for (const auto& [id, pos] : mapped)
      if (visible(pose, pos, sensor)) ids.push_back(id);
    if (opt.include_unmapped_world) {
      if (opt.world == nullptr)
        throw InfeasibleConfig("include_unmapped_world requires a world");
      for (std::uint32_t l = 0; l < opt.world->landmarks.size(); ++l)
        if (!belief.index().contains(landmark_key(l)) &&
            visible(pose, opt.world->landmarks[l], sensor))
          ids.push_back(l);
    }
    std::sort(ids.begin(), ids.end());
  }
  return assoc;
}

// ---------------------------------------------------------------------------
// Collective Jacobian assembly
// ---------------------------------------------------------------------------

struct ComponentMeta {
  int step;                // 1-based lookahead step
  std::uint32_t landmark;
};

/// Everything a candidate evaluation needs: the propagated conditioning
/// belief Lambda^{Aug-}, the partitionable measurement rows, and the shared
/// (motion + landmark initialization) rows satisfying
/// prop.info == zero-augmented prior + shared^T shared.
///
/// First sightings of landmarks that are not in the belief yet constrain an
/// otherwise informationless block, so their rows are folded into the
/// conditioning prior rather than partitioned; without this Lambda^{Aug-}
/// would be singular and the bound denominators undefined.
struct PlanningFactors {
  GaussianBelief prop;
  CollectiveJacobian meas;
  CollectiveJacobian shared;
  std::vector<ComponentMeta> components;

  // Horizon-sum support (filled on request): zero-augmented prior and
  // per-step boundaries of state/rows.
  std::optional<Eigen::MatrixXd> aug_only;
  std::vector<int> step_dim_end;
  std::vector<int> step_meas_row_end;
  std::vector<int> step_shared_row_end;

  AssociationInfo association_info() const {
    AssociationInfo info;
    info.component_cols.reserve(components.size());
    for (const ComponentMeta& c : components) {
      const VariableIndex& pv = prop.index().at(pose_key(pose_num_at(c.step)));
      const VariableIndex& lv = prop.index().at(landmark_key(c.landmark));
      std::vector<int> cols = {pv.offset, pv.offset + 1, pv.offset + 2, lv.offset,
                               lv.offset + 1};
      std::sort(cols.begin(), cols.end());
      info.component_cols.push_back(std::move(cols));
    }
    return info;
  }

  std::uint32_t first_new_pose_num = 0;  // pose number of step 1

  std::uint32_t pose_num_at(int step) const {
    return first_new_pose_num + static_cast<std::uint32_t>(step) - 1;
  }
};

inline PlanningFactors build_collective_jacobian(const GaussianBelief& belief,
                                                 const CandidatePath& path,
                                                 const DataAssociation& assoc,
                                                 const MotionSpec& motion,
                                                 const SensorSpec& sensor,
                                                 const World* world_for_new = nullptr,
                                                 bool want_step_prefixes = false) {
  const int steps = static_cast<int>(path.actions.size());
  if (assoc.step_count() != steps)
    throw DimensionMismatch("association has " + std::to_string(assoc.step_count()) +
                            " steps, path has " + std::to_string(steps));

  const int n0 = belief.dim();
  const std::uint32_t last_pose_num = belief.index().last_pose().key.num;

  // Pass 1: layout. Each step adds one pose and any first-seen landmarks.
  VariableIndexMap index = belief.index();
  std::vector<std::vector<std::uint32_t>> new_lms(static_cast<std::size_t>(steps));
  std::vector<ComponentMeta> components;
  int total_dim = n0;
  int shared_rows_n = 0;
  int meas_rows_n = 0;
  std::vector<int> step_dim_end, step_shared_end, step_meas_end;
  for (int s = 1; s <= steps; ++s) {
    index = index.appended(pose_key(last_pose_num + static_cast<std::uint32_t>(s)));
    total_dim += 3;
    shared_rows_n += 3;
    for (std::uint32_t id : assoc.per_step[static_cast<std::size_t>(s - 1)]) {
      if (index.contains(landmark_key(id))) {
        components.push_back({s, id});
        meas_rows_n += 2;
      } else {
        if (world_for_new == nullptr || id >= world_for_new->landmarks.size())
          throw UnknownVariable("landmark " + std::to_string(id) +
                                " is not in the belief and no world was supplied");
        index = index.appended(landmark_key(id));
        new_lms[static_cast<std::size_t>(s - 1)].push_back(id);
        total_dim += 2;
        shared_rows_n += 2;
      }
    }
    step_dim_end.push_back(total_dim);
    step_shared_end.push_back(shared_rows_n);
    step_meas_end.push_back(meas_rows_n);
  }

  // Pass 2: assemble rows and the propagated information matrix.
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(total_dim, total_dim);
  lambda.topLeftCorner(n0, n0) = belief.info().matrix();
  Eigen::VectorXd mean(total_dim);
  mean.head(n0) = belief.mean();

  Eigen::MatrixXd shared = Eigen::MatrixXd::Zero(shared_rows_n, total_dim);
  Eigen::MatrixXd meas = Eigen::MatrixXd::Zero(meas_rows_n, total_dim);
  std::vector<int> meas_component(static_cast<std::size_t>(meas_rows_n));

  const Eigen::MatrixXd v_whiten = whitener(sensor.noise, "measurement");
  const VariableIndex& lastp = belief.index().last_pose();
  int prev_pose_offset = lastp.offset;
  Pose2 prev_pose{belief.mean()[lastp.offset], belief.mean()[lastp.offset + 1],
                  belief.mean()[lastp.offset + 2]};

  int sh = 0;  // shared row cursor
  int mr = 0;  // meas row cursor
  int comp = 0;
  for (int s = 1; s <= steps; ++s) {
    const Action2& a = path.actions[static_cast<std::size_t>(s - 1)];
    const Pose2 pred = path.poses[static_cast<std::size_t>(s)];
    const VariableIndex& pv =
        index.at(pose_key(last_pose_num + static_cast<std::uint32_t>(s)));

    const detail::MotionRows rows = detail::motion_rows(motion, prev_pose, a);
    shared.block<3, 3>(sh, prev_pose_offset) = rows.prev_block;
    shared.block<3, 3>(sh, pv.offset) = rows.next_block;
    sh += 3;
    mean[pv.offset] = pred.x;
    mean[pv.offset + 1] = pred.y;
    mean[pv.offset + 2] = pred.theta;

    // First sightings initialize their landmark; rows join the prior stack.
    for (std::uint32_t id : new_lms[static_cast<std::size_t>(s - 1)]) {
      const VariableIndex& lv = index.at(landmark_key(id));
      const Eigen::Vector2d z = range_bearing(pred, world_for_new->landmarks[id]);
      const Vec2 init = invert_range_bearing(pred, z);
      mean.segment<2>(lv.offset) = init;
      Eigen::Matrix<double, 2, 3> h_pose;
      Eigen::Matrix2d h_lm;
      range_bearing_jacobians(pred, init, h_pose, h_lm);
      shared.block<2, 3>(sh, pv.offset) = v_whiten * h_pose;
      shared.block<2, 2>(sh, lv.offset) = v_whiten * h_lm;
      sh += 2;
    }

    // Re-observations are the partitionable components.
    for (std::uint32_t id : assoc.per_step[static_cast<std::size_t>(s - 1)]) {
      if (std::find(new_lms[static_cast<std::size_t>(s - 1)].begin(),
                    new_lms[static_cast<std::size_t>(s - 1)].end(), id) !=
          new_lms[static_cast<std::size_t>(s - 1)].end())
        continue;
      const VariableIndex& lv = index.at(landmark_key(id));
      const Vec2 lm_mean(mean[lv.offset], mean[lv.offset + 1]);
      Eigen::Matrix<double, 2, 3> h_pose;
      Eigen::Matrix2d h_lm;
      range_bearing_jacobians(pred, lm_mean, h_pose, h_lm);
      meas.block<2, 3>(mr, pv.offset) = v_whiten * h_pose;
      meas.block<2, 2>(mr, lv.offset) = v_whiten * h_lm;
      meas_component[static_cast<std::size_t>(mr)] = comp;
      meas_component[static_cast<std::size_t>(mr + 1)] = comp;
      mr += 2;
      ++comp;
    }

    prev_pose = pred;
    prev_pose_offset = pv.offset;
  }

  lambda.noalias() += shared.transpose() * shared;

  std::vector<int> old_cols(static_cast<std::size_t>(n0));
  for (int i = 0; i < n0; ++i) old_cols[static_cast<std::size_t>(i)] = i;
  std::vector<int> new_cols(static_cast<std::size_t>(total_dim - n0));
  for (int i = n0; i < total_dim; ++i) new_cols[static_cast<std::size_t>(i - n0)] = i;

  PlanningFactors out{
      GaussianBelief(InfoMatrix(std::move(lambda)), std::move(mean), index),
      CollectiveJacobian{std::move(meas), std::move(meas_component),
                         static_cast<int>(components.size()), old_cols, new_cols},
      CollectiveJacobian{std::move(shared), std::vector<int>(static_cast<std::size_t>(shared_rows_n), 0),
                         shared_rows_n > 0 ? 1 : 0, old_cols, new_cols},
      std::move(components),
      std::nullopt,
      {},
      {},
      {}};
  out.first_new_pose_num = last_pose_num + 1;
  if (want_step_prefixes) {
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(total_dim, total_dim);
    aug.topLeftCorner(n0, n0) = belief.info().matrix();
    out.aug_only = std::move(aug);
    out.step_dim_end = std::move(step_dim_end);
    out.step_shared_row_end = std::move(step_shared_end);
    out.step_meas_row_end = std::move(step_meas_end);
  }
  return out;
}

}  // namespace mpplan
