#pragma once

/**
 * Candidate evaluation, interval-dominance pruning, selection with a
 * certified loss bound, adaptive bound refinement over the partition tree,
 * and the re-planning episode loop.
 *
 * The planner minimizes expected entropy; the objective carried in records is
 * entropy minus alpha times the state reward, so bounds shift by a per-path
 * constant and interval widths are untouched by the state-dependent term.
 *
 * Pruning drops every path whose lower bound exceeds the smallest upper
 * bound; such a path can never be the exact optimum. Selection takes the
 * smallest lower bound (ties to the smaller path id) and reports
 * ub(chosen) - lb(chosen) as the worst-case loss.
 */

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mpplan/entropy_bounds.hpp"
#include "mpplan/errors.hpp"
#include "mpplan/gaussian_belief.hpp"
#include "mpplan/partition_tree.hpp"
#include "mpplan/prm.hpp"
#include "mpplan/slam_sim.hpp"

namespace mpplan {

enum class Objective { final_step, horizon_sum };

struct PlanConfig {
  int partition_depth = 1;
  SplitStrategy strategy = SplitStrategy::seeded_random;
  std::uint64_t partition_seed = 0;
  Backend backend = Backend::dense;
  Objective objective = Objective::final_step;
  double alpha = 0.0;
  Vec2 goal = Vec2::Zero();
  int refine_budget = 0;
  bool exact_eval = true;
  int threads = 1;
  bool associate_unmapped = false;
  const World* world = nullptr;  // required when associate_unmapped is set
};

struct PhaseTimings {
  double assoc_s = 0.0;
  double jacobian_s = 0.0;
  double bounds_s = 0.0;
  double exact_s = 0.0;
};

struct EvaluationRecord {
  int path_id = 0;
  BoundsInterval interval;  // objective units (entropy - alpha * state reward)
  std::optional<double> exact;
  double state_reward = 0.0;
  int rows = 0;
  int components = 0;
  int tree_level = 0;
  PhaseTimings timings;
  std::vector<std::pair<std::string, BoundsInterval>> refinement_trace;
};

struct PruneResult {
  std::vector<int> pruned_ids;
  std::vector<int> survivor_ids;
};

/// Interval-dominance pruning: a path with lb strictly above the smallest ub
/// cannot be optimal (its exact value exceeds some other path's).
inline PruneResult prune(std::span<const EvaluationRecord> records) {
  PruneResult out;
  if (records.empty()) return out;
  double min_ub = records[0].interval.ub;
  for (const EvaluationRecord& r : records) min_ub = std::min(min_ub, r.interval.ub);
  for (const EvaluationRecord& r : records) {
    if (r.interval.lb > min_ub)
      out.pruned_ids.push_back(r.path_id);
    else
      out.survivor_ids.push_back(r.path_id);
  }
  std::sort(out.pruned_ids.begin(), out.pruned_ids.end());
  std::sort(out.survivor_ids.begin(), out.survivor_ids.end());
  return out;
}

struct SelectionResult {
  int chosen_path_id = -1;
  double loss_bound = 0.0;
  std::vector<int> pruned_ids;
  std::vector<int> survivor_ids;
};

/// Choose the survivor with the lowest lower bound; ties break to the smaller
/// path id. loss_bound = ub(chosen) - lb(chosen) caps the regret:
/// exact(chosen) - min exact <= loss_bound.
inline SelectionResult select_with_loss(std::span<const EvaluationRecord> records) {
  if (records.empty()) throw Error("select_with_loss needs at least one record");
  SelectionResult out;
  PruneResult pr = prune(records);
  out.pruned_ids = std::move(pr.pruned_ids);
  out.survivor_ids = std::move(pr.survivor_ids);

  const EvaluationRecord* best = nullptr;
  for (const EvaluationRecord& r : records) {
    if (!std::binary_search(out.survivor_ids.begin(), out.survivor_ids.end(), r.path_id))
      continue;
    if (!best || r.interval.lb < best->interval.lb ||
        (r.interval.lb == best->interval.lb && r.path_id < best->path_id))
      best = &r;
  }
  out.chosen_path_id = best->path_id;
  out.loss_bound = best->interval.ub - best->interval.lb;
  return out;
}

/// Expected state reward of a path: negative distance from the final
/// ML-predicted pose to the goal. Depends on propagated means only.
inline double state_reward(const GaussianBelief&, const CandidatePath& path,
                           const PlanConfig& cfg) {
  const Pose2& p = path.poses.back();
  return -(Vec2(p.x, p.y) - cfg.goal).norm();
}

// ---------------------------------------------------------------------------
// Per-candidate interval evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Interval at one tree level: lower cover = all nodes of the level, upper
/// node = the level's first node. Level 0 degenerates to the exact value.
inline BoundsInterval level_interval(const GaussianBelief& prop, const CollectiveJacobian& a,
                                     const PartitionTree& tree, int level, Backend backend,
                                     const RamdlInputs* ramdl) {
  const BoundSelection lower = make_level_lower_selection(tree, level);
  const BoundSelection upper = make_upper_selection(tree, NodeId{level, 1});
  return partitioned_bounds(prop, a, upper, lower, backend, ramdl);
}

/// The per-step slices of a candidate's factors, for the horizon-sum
/// objective H(X_i | Z_{k+1:i}) summed over i.
struct StepSlice {
  GaussianBelief prop;        // Lambda^{Aug-}_i over the step-i state
  CollectiveJacobian meas;    // measurement rows of steps <= i
  CollectiveJacobian shared;  // motion + init rows of steps <= i
};

inline StepSlice step_slice(const PlanningFactors& pf, int step_index /*0-based*/) {
  if (!pf.aug_only.has_value())
    throw Error("horizon-sum slices need factors built with step prefixes");
  const int d = pf.step_dim_end[static_cast<std::size_t>(step_index)];
  const int sh = pf.step_shared_row_end[static_cast<std::size_t>(step_index)];
  const int mr = pf.step_meas_row_end[static_cast<std::size_t>(step_index)];
  const int n0 = static_cast<int>(pf.meas.old_cols.size());

  Eigen::MatrixXd shared_rows = pf.shared.rows.topLeftCorner(sh, d);
  Eigen::MatrixXd lambda = pf.aug_only->topLeftCorner(d, d);
  lambda.noalias() += shared_rows.transpose() * shared_rows;

  std::vector<VariableKey> keys;
  for (const VariableIndex& v : pf.prop.index().vars())
    if (v.offset < d) keys.push_back(v.key);

  std::vector<int> old_cols(static_cast<std::size_t>(n0));
  for (int i = 0; i < n0; ++i) old_cols[static_cast<std::size_t>(i)] = i;
  std::vector<int> new_cols(static_cast<std::size_t>(d - n0));
  for (int i = n0; i < d; ++i) new_cols[static_cast<std::size_t>(i - n0)] = i;

  StepSlice s{
      GaussianBelief(InfoMatrix(std::move(lambda)), pf.prop.mean().head(d),
                     VariableIndexMap(std::move(keys))),
      CollectiveJacobian{pf.meas.rows.topLeftCorner(mr, d),
                         std::vector<int>(pf.meas.row_component.begin(),
                                          pf.meas.row_component.begin() + mr),
                         mr / 2, old_cols, new_cols},
      CollectiveJacobian{std::move(shared_rows),
                         std::vector<int>(static_cast<std::size_t>(sh), 0), sh > 0 ? 1 : 0,
                         old_cols, new_cols}};
  return s;
}

/// Summed per-step bounds (the objective-level bound-by-summation form).
inline BoundsInterval horizon_sum_interval(const PlanningFactors& pf, const PlanConfig& cfg,
                                           std::uint64_t path_seed, double prior_logdet,
                                           const CovarianceTable* cov) {
  double lb = 0.0, ub = 0.0;
  const int steps = static_cast<int>(pf.step_dim_end.size());
  for (int s = 0; s < steps; ++s) {
    const StepSlice slice = step_slice(pf, s);
    const RamdlInputs ramdl{prior_logdet, cov, &slice.shared};
    const RamdlInputs* rp = cfg.backend == Backend::ramdl ? &ramdl : nullptr;
    const int m = slice.meas.num_components;
    if (m == 0) {
      const double h =
          cfg.backend == Backend::ramdl
              ? 0.5 * (slice.prop.dim() * log_two_pi_e() -
                       ramdl_logdet(prior_logdet, *cov, slice.shared))
              : entropy(slice.prop);
      lb += h;
      ub += h;
      continue;
    }
    const int level = std::min(cfg.partition_depth, PartitionTree::max_depth(m));
    const PartitionTree tree = PartitionTree::build(
        m, level, cfg.strategy, mix_seed(path_seed, static_cast<std::uint64_t>(s)));
    const BoundsInterval iv = level_interval(slice.prop, slice.meas, tree, level,
                                             cfg.backend, rp);
    lb += iv.lb;
    ub += iv.ub;
  }
  return make_interval(lb, ub, "horizon-sum");
}

inline double horizon_sum_exact(const PlanningFactors& pf) {
  double total = 0.0;
  const int steps = static_cast<int>(pf.step_dim_end.size());
  for (int s = 0; s < steps; ++s) {
    const StepSlice slice = step_slice(pf, s);
    total += conditional_entropy_exact(slice.prop, slice.meas);
  }
  return total;
}

struct CandidateContext {
  std::optional<PlanningFactors> factors;
  std::optional<PartitionTree> tree;
  int level = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Planning session
// ---------------------------------------------------------------------------

class PlanningSession {
 public:
  std::vector<EvaluationRecord>& records() { return records_; }
  const std::vector<EvaluationRecord>& records() const { return records_; }
  bool separated() const { return separated_; }
  double one_time_seconds() const { return one_time_s_; }
  double refine_seconds() const { return refine_s_; }
  const CovarianceTable& covariance() const { return cov_; }
  double prior_logdet() const { return prior_logdet_; }

  /// While the two best candidates overlap and budget remains, ascend one
  /// partition level for both and recompute. Upper bounds tighten
  /// monotonically along the chain; at level 0 the interval degenerates to
  /// the exact value, so refinement either separates the leaders or proves a
  /// tie. Applies to the final-step objective (per-candidate trees).
  void refine_adaptive(int budget) {
    if (contexts_.empty())
      throw Error("refinement requires a session evaluated with refine_budget > 0");
    const auto t0 = std::chrono::steady_clock::now();
    while (budget > 0) {
      const PruneResult pr = prune(records_);
      if (pr.survivor_ids.size() <= 1) {
        separated_ = true;
        break;
      }
      EvaluationRecord* top1 = nullptr;
      EvaluationRecord* top2 = nullptr;
      for (EvaluationRecord& r : records_) {
        if (!std::binary_search(pr.survivor_ids.begin(), pr.survivor_ids.end(), r.path_id))
          continue;
        if (!top1 || r.interval.lb < top1->interval.lb) {
          top2 = top1;
          top1 = &r;
        } else if (!top2 || r.interval.lb < top2->interval.lb) {
          top2 = &r;
        }
      }
      if (top1->interval.ub <= top2->interval.lb) {
        separated_ = true;
        break;
      }
      bool changed = false;
      for (EvaluationRecord* r : {top1, top2}) changed = refine_one(*r) || changed;
      if (!changed) break;  // both at the root already; an exact tie stands
      --budget;
    }
    refine_s_ += detail::seconds_since(t0);
  }

 private:
  friend PlanningSession evaluate_candidates(const GaussianBelief&,
                                             const std::vector<CandidatePath>&,
                                             const MotionSpec&, const SensorSpec&,
                                             const PlanConfig&);

  bool refine_one(EvaluationRecord& rec) {
    detail::CandidateContext& ctx = contexts_[static_cast<std::size_t>(rec.path_id)];
    if (!ctx.factors || !ctx.tree || ctx.level == 0) return false;
    ctx.level -= 1;
    const RamdlInputs ramdl{prior_logdet_, &cov_, &ctx.factors->shared};
    const RamdlInputs* rp = cfg_.backend == Backend::ramdl ? &ramdl : nullptr;
    const BoundsInterval base = detail::level_interval(
        ctx.factors->prop, ctx.factors->meas, *ctx.tree, ctx.level, cfg_.backend, rp);
    const double shift = -cfg_.alpha * rec.state_reward;
    rec.interval = BoundsInterval{base.lb + shift, base.ub + shift, base.selection};
    rec.tree_level = ctx.level;
    rec.refinement_trace.emplace_back(base.selection, rec.interval);
    return true;
  }

  std::vector<EvaluationRecord> records_;
  std::vector<detail::CandidateContext> contexts_;
  PlanConfig cfg_;
  CovarianceTable cov_;
  double prior_logdet_ = 0.0;
  double one_time_s_ = 0.0;
  double refine_s_ = 0.0;
  bool separated_ = false;
};

/// Evaluate bounds (and optionally exact values) for every candidate path.
/// With the ramdl backend, the prior log-determinant and the covariance
/// entries of all involved planning-time variables are recovered once and
/// shared across paths. Results are independent of the thread count.
inline PlanningSession evaluate_candidates(const GaussianBelief& belief,
                                           const std::vector<CandidatePath>& paths,
                                           const MotionSpec& motion, const SensorSpec& sensor,
                                           const PlanConfig& cfg) {
  if (paths.empty()) throw Error("evaluate_candidates needs at least one path");
  PlanningSession session;
  session.cfg_ = cfg;
  const bool keep = cfg.refine_budget > 0;

  const AssocOptions assoc_opt{cfg.associate_unmapped, cfg.world};

  // Associations first; the ramdl one-time recovery needs their union.
  std::vector<DataAssociation> assocs(paths.size());
  std::vector<double> assoc_times(paths.size(), 0.0);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    assocs[i] = predict_associations(belief, paths[i], sensor, assoc_opt);
    assoc_times[i] = detail::seconds_since(t0);
  }

  if (cfg.backend == Backend::ramdl) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<VariableKey> involved;
    involved.push_back(belief.index().last_pose().key);
    for (const DataAssociation& a : assocs)
      for (const auto& step : a.per_step)
        for (std::uint32_t id : step)
          if (belief.index().contains(landmark_key(id))) involved.push_back(landmark_key(id));
    std::sort(involved.begin(), involved.end());
    involved.erase(std::unique(involved.begin(), involved.end()), involved.end());
    session.prior_logdet_ = logdet_exact(belief.info());
    session.cov_ = recover_covariance_entries(belief, involved);
    session.one_time_s_ = detail::seconds_since(t0);
  }

  session.records_.resize(paths.size());
  std::vector<detail::CandidateContext> contexts(keep ? paths.size() : 0);

  auto evaluate_one = [&](std::size_t i) {
    EvaluationRecord rec;
    rec.path_id = static_cast<int>(i);
    rec.timings.assoc_s = assoc_times[i];

    auto t0 = std::chrono::steady_clock::now();
    PlanningFactors pf = build_collective_jacobian(
        belief, paths[i], assocs[i], motion, sensor, cfg.world,
        cfg.objective == Objective::horizon_sum);
    rec.timings.jacobian_s = detail::seconds_since(t0);
    rec.rows = pf.meas.row_count();
    rec.components = pf.meas.num_components;
    rec.state_reward = state_reward(belief, paths[i], cfg);
    const double shift = -cfg.alpha * rec.state_reward;

    const RamdlInputs ramdl{session.prior_logdet_, &session.cov_, &pf.shared};
    const RamdlInputs* rp = cfg.backend == Backend::ramdl ? &ramdl : nullptr;

    t0 = std::chrono::steady_clock::now();
    const int m = pf.meas.num_components;
    BoundsInterval base;
    int level = 0;
    if (cfg.objective == Objective::horizon_sum) {
      base = detail::horizon_sum_interval(pf, cfg, cfg.partition_seed, session.prior_logdet_,
                                          &session.cov_);
    } else if (m == 0) {
      const double h = cfg.backend == Backend::ramdl
                           ? 0.5 * (pf.prop.dim() * log_two_pi_e() -
                                    ramdl_logdet(session.prior_logdet_, session.cov_, pf.shared))
                           : entropy(pf.prop);
      base = BoundsInterval{h, h, "empty"};
    } else {
      // The tree seed is shared across candidates, so identical paths get
      // identical partitions and identical intervals.
      level = std::min(cfg.partition_depth, PartitionTree::max_depth(m));
      PartitionTree tree = PartitionTree::build(m, level, cfg.strategy, cfg.partition_seed);
      base = detail::level_interval(pf.prop, pf.meas, tree, level, cfg.backend, rp);
      if (keep) contexts[i].tree = std::move(tree);
    }
    rec.timings.bounds_s = detail::seconds_since(t0);
    rec.interval = BoundsInterval{base.lb + shift, base.ub + shift, base.selection};
    rec.tree_level = level;

    if (cfg.exact_eval) {
      t0 = std::chrono::steady_clock::now();
      const double ex = cfg.objective == Objective::horizon_sum
                            ? detail::horizon_sum_exact(pf)
                            : conditional_entropy_exact(pf.prop, pf.meas);
      rec.timings.exact_s = detail::seconds_since(t0);
      rec.exact = ex + shift;
    }

    if (keep) {
      contexts[i].factors = std::move(pf);
      contexts[i].level = level;
    }
    session.records_[i] = std::move(rec);
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1 || paths.size() < 2) {
    for (std::size_t i = 0; i < paths.size(); ++i) evaluate_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> cursor{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = cursor.fetch_add(1); i < paths.size(); i = cursor.fetch_add(1))
          evaluate_one(i);
      });
    for (std::thread& t : pool) t.join();
  }

  session.contexts_ = std::move(contexts);
  return session;
}

// ---------------------------------------------------------------------------
// Execution and re-planning
// ---------------------------------------------------------------------------

struct ExecutedStep {
  GaussianBelief belief;
  Pose2 true_pose;
  int measurement_count = 0;
  int new_landmarks = 0;
};

/// Apply one action in simulation: the true pose moves with process noise,
/// the world is sensed from the true pose with measurement noise, and the
/// belief receives the motion factor plus all measurement factors through an
/// information-filter update. Unmapped landmarks are initialized from their
/// first reading.
inline ExecutedStep execute_action(const World& world, const GaussianBelief& belief,
                                   const Pose2& true_pose, const Action2& a,
                                   const MotionSpec& motion, const SensorSpec& sensor,
                                   std::uint64_t step_seed) {
  // True motion.
  Rng wrng(mix_seed(step_seed, 0));
  Eigen::Vector3d wn;
  wn << wrng.normal(), wrng.normal(), wrng.normal();
  const Eigen::LLT<Eigen::Matrix3d> wllt(motion.process_noise);
  const Eigen::Vector3d w = wllt.matrixL() * wn;
  Pose2 true_next = motion.apply(true_pose, a);
  true_next.x += w(0);
  true_next.y += w(1);
  true_next.theta = wrap_angle(true_next.theta + w(2));

  // Predicted mean pose and the new-pose variable.
  const VariableIndex& lastp = belief.index().last_pose();
  const Pose2 prev_mean{belief.mean()[lastp.offset], belief.mean()[lastp.offset + 1],
                        belief.mean()[lastp.offset + 2]};
  const Pose2 pred = motion.apply(prev_mean, a);
  const VariableKey new_pose = pose_key(lastp.key.num + 1);

  // Simulated sightings from the true pose.
  struct Sight {
    std::uint32_t lm;
    Eigen::Vector2d z;
    bool is_new;
  };
  std::vector<Sight> sights;
  for (std::uint32_t l = 0; l < world.landmarks.size(); ++l) {
    if (!visible(true_next, world.landmarks[l], sensor)) continue;
    Rng rng(mix_seed(step_seed, 1 + l));
    Eigen::Vector2d noise;
    noise << rng.normal(), rng.normal();
    const Eigen::LLT<Eigen::Matrix2d> vllt(sensor.noise);
    Eigen::Vector2d z = range_bearing(true_next, world.landmarks[l]);
    z += vllt.matrixL() * noise;
    z(0) = std::max(z(0), 1e-6);  // a range sensor never reads negative
    z(1) = wrap_angle(z(1));
    sights.push_back({l, z, !belief.index().contains(landmark_key(l))});
  }

  // Augment with the new pose and any new landmarks.
  std::vector<NewVariable> new_vars;
  Eigen::Vector3d pv;
  pv << pred.x, pred.y, pred.theta;
  new_vars.push_back({new_pose, pv});
  int new_lms = 0;
  for (const Sight& s : sights)
    if (s.is_new) {
      new_vars.push_back({landmark_key(s.lm),
                          Eigen::Vector2d(invert_range_bearing(pred, s.z))});
      ++new_lms;
    }
  GaussianBelief aug = augment(belief, new_vars);

  const int n = aug.dim();
  Eigen::MatrixXd lambda = aug.info().matrix();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

  // Motion factor (zero residual at the prediction).
  const VariableIndex& npv = aug.index().at(new_pose);
  {
    const detail::MotionRows rows = detail::motion_rows(motion, prev_mean, a);
    Eigen::Matrix<double, 3, 6> j;
    j << rows.prev_block, rows.next_block;
    const Eigen::Matrix<double, 6, 6> outer = j.transpose() * j;
    lambda.block<3, 3>(lastp.offset, lastp.offset) += outer.block<3, 3>(0, 0);
    lambda.block<3, 3>(lastp.offset, npv.offset) += outer.block<3, 3>(0, 3);
    lambda.block<3, 3>(npv.offset, lastp.offset) += outer.block<3, 3>(3, 0);
    lambda.block<3, 3>(npv.offset, npv.offset) += outer.block<3, 3>(3, 3);
  }

  // Measurement factors, linearized at the predicted pose and landmark means.
  const Eigen::MatrixXd v_whiten = whitener(sensor.noise, "measurement");
  for (const Sight& s : sights) {
    const VariableIndex& lv = aug.index().at(landmark_key(s.lm));
    const Vec2 lm_mean(aug.mean()[lv.offset], aug.mean()[lv.offset + 1]);
    Eigen::Matrix<double, 2, 3> h_pose;
    Eigen::Matrix2d h_lm;
    range_bearing_jacobians(pred, lm_mean, h_pose, h_lm);
    const Eigen::Matrix<double, 2, 3> wp = v_whiten * h_pose;
    const Eigen::Matrix2d wl = v_whiten * h_lm;
    Eigen::Vector2d res = s.z - range_bearing(pred, lm_mean);
    res(1) = wrap_angle(res(1));
    res = v_whiten * res;

    lambda.block<3, 3>(npv.offset, npv.offset) += wp.transpose() * wp;
    lambda.block<3, 2>(npv.offset, lv.offset) += wp.transpose() * wl;
    lambda.block<2, 3>(lv.offset, npv.offset) += wl.transpose() * wp;
    lambda.block<2, 2>(lv.offset, lv.offset) += wl.transpose() * wl;
    rhs.segment<3>(npv.offset) += wp.transpose() * res;
    rhs.segment<2>(lv.offset) += wl.transpose() * res;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("execute_action produced a non-PD belief");
  Eigen::VectorXd mean = aug.mean() + llt.solve(rhs);
  mean[npv.offset + 2] = wrap_angle(mean[npv.offset + 2]);

  return ExecutedStep{GaussianBelief(InfoMatrix(std::move(lambda)), std::move(mean),
                                     aug.index()),
                      true_next, static_cast<int>(sights.size()), new_lms};
}

struct ReplanSetup {
  MotionSpec motion;
  SensorSpec sensor;
  PrmParams prm;
  PlanConfig plan;
  int path_count = 100;
  std::uint64_t exec_seed = 0;
  double goal_tolerance = 1.0;
};

struct SessionLog {
  int step_index = 0;
  Pose2 true_pose;
  Pose2 est_pose;
  double dist_to_goal = 0.0;
  std::vector<EvaluationRecord> records;
  SelectionResult selection;
  bool separated = false;
};

struct EpisodeLog {
  std::vector<SessionLog> sessions;
  Pose2 final_true_pose;
  Pose2 final_est_pose;
  bool reached_goal = false;
};

/// Plan, take the chosen path's first action, update the belief from the
/// simulated world, re-draw paths from the new pose estimate; repeat.
inline EpisodeLog replan_loop(const World& world, GaussianBelief belief, Pose2 true_pose,
                              const Vec2& goal, int steps, const ReplanSetup& setup) {
  if (steps < 1) throw InfeasibleConfig("replan loop needs at least one step");
  EpisodeLog episode;
  for (int s = 0; s < steps; ++s) {
    const VariableIndex& lastp = belief.index().last_pose();
    const Pose2 est{belief.mean()[lastp.offset], belief.mean()[lastp.offset + 1],
                    belief.mean()[lastp.offset + 2]};
    if ((Vec2(est.x, est.y) - goal).norm() <= setup.goal_tolerance) {
      episode.reached_goal = true;
      break;
    }

    PrmParams prm = setup.prm;
    prm.seed = mix_seed(setup.prm.seed, static_cast<std::uint64_t>(s));
    const std::vector<CandidatePath> paths =
        prm_generate(world, est, goal, setup.path_count, prm);

    PlanConfig cfg = setup.plan;
    cfg.goal = goal;
    cfg.partition_seed = mix_seed(setup.plan.partition_seed, static_cast<std::uint64_t>(s));
    PlanningSession session = evaluate_candidates(belief, paths, setup.motion,
                                                  setup.sensor, cfg);
    if (cfg.refine_budget > 0) session.refine_adaptive(cfg.refine_budget);
    const SelectionResult sel = select_with_loss(session.records());

    SessionLog log;
    log.step_index = s;
    log.true_pose = true_pose;
    log.est_pose = est;
    log.dist_to_goal = (Vec2(est.x, est.y) - goal).norm();
    log.records = session.records();
    log.selection = sel;
    log.separated = session.separated();
    episode.sessions.push_back(std::move(log));

    const CandidatePath& chosen = paths[static_cast<std::size_t>(sel.chosen_path_id)];
    ExecutedStep step = execute_action(world, belief, true_pose, chosen.actions[0],
                                       setup.motion, setup.sensor,
                                       mix_seed(setup.exec_seed, static_cast<std::uint64_t>(s)));
    belief = std::move(step.belief);
    true_pose = step.true_pose;
  }
  const VariableIndex& lastp = belief.index().last_pose();
  episode.final_est_pose = Pose2{belief.mean()[lastp.offset], belief.mean()[lastp.offset + 1],
                                 belief.mean()[lastp.offset + 2]};
  episode.final_true_pose = true_pose;
  if (!episode.reached_goal)
    episode.reached_goal =
        (Vec2(episode.final_est_pose.x, episode.final_est_pose.y) - goal).norm() <=
        setup.goal_tolerance;
  return episode;
}

}  // namespace mpplan
