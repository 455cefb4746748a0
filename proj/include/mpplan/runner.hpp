#pragma once

/**
 * Batch scenario runner: executes planning sessions, episodes, and parameter
 * sweeps from a ScenarioConfig, and emits CSV/JSON results.
 *
 * records.csv and the sweep CSVs carry only deterministic fields at full
 * double precision, so identical (config, seed) runs produce byte-identical
 * files; wall-clock timings live in report.json. Schemas are versioned by a
 * leading comment line.
 */

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mpplan/errors.hpp"
#include "mpplan/planner.hpp"
#include "mpplan/prm.hpp"
#include "mpplan/scenario.hpp"
#include "mpplan/slam_sim.hpp"

namespace mpplan {

struct RunOptions {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed_override;
  int repeats = 1;
  int threads = 1;
};

namespace csvio {

/// Full-precision scientific notation; round-trips doubles losslessly.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

inline void write_lines(const std::filesystem::path& path,
                        const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const std::string& l : lines) out << l << "\n";
}

}  // namespace csvio

namespace rundetail {

inline json environment_fingerprint() {
  json env;
  env["compiler"] = __VERSION__;
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
  env["pointer_bits"] = static_cast<int>(sizeof(void*) * 8);
  return env;
}

inline void apply_overrides(ScenarioConfig& cfg, const RunOptions& opts) {
  if (opts.output_dir) cfg.output_dir = *opts.output_dir;
  if (opts.seed_override) {
    cfg.world_seed = *opts.seed_override;
    cfg.prior_seed = mix_seed(*opts.seed_override, 1);
    cfg.planning_seed = mix_seed(*opts.seed_override, 2);
  }
}

struct ScenarioObjects {
  World world;
  PriorMappingResult prior;
  Pose2 start;
  std::vector<CandidatePath> paths;
};

inline ScenarioObjects build_scenario(const ScenarioConfig& cfg) {
  World world = generate_world(cfg.world_config(), cfg.world_seed);
  PriorOptions popt;
  popt.anchor_sigma = cfg.anchor_sigma;
  popt.keep_fraction = cfg.keep_fraction;
  popt.prune_salt = mix_seed(cfg.prior_seed, 0x44454e53ull);
  const std::vector<Pose2> traj = cfg.trajectory_poses();
  PriorMappingResult prior =
      prior_mapping(world, traj, cfg.motion_spec(), cfg.sensor_spec(), cfg.prior_seed, popt);
  const Pose2 start = cfg.start ? *cfg.start : prior.true_poses.back();
  std::vector<CandidatePath> paths =
      prm_generate(world, start, cfg.goal, cfg.path_count, cfg.prm_params());
  return {std::move(world), std::move(prior), start, std::move(paths)};
}

inline std::vector<std::string> records_csv(const std::vector<EvaluationRecord>& records,
                                            const SelectionResult& sel) {
  std::vector<std::string> lines;
  lines.push_back("# schema mpplan-records-v1");
  lines.push_back("path_id,lb,ub,exact,pruned,rows,components,tree_level,state_reward");
  for (const EvaluationRecord& r : records) {
    const bool pruned =
        std::binary_search(sel.pruned_ids.begin(), sel.pruned_ids.end(), r.path_id);
    std::ostringstream os;
    os << r.path_id << "," << csvio::fmt(r.interval.lb) << "," << csvio::fmt(r.interval.ub)
       << "," << (r.exact ? csvio::fmt(*r.exact) : std::string()) << "," << (pruned ? 1 : 0)
       << "," << r.rows << "," << r.components << "," << r.tree_level << ","
       << csvio::fmt(r.state_reward);
    lines.push_back(os.str());
  }
  return lines;
}

inline std::vector<std::string> plot_csv(std::vector<EvaluationRecord> records,
                                         const SelectionResult& sel) {
  std::sort(records.begin(), records.end(),
            [](const EvaluationRecord& a, const EvaluationRecord& b) {
              return a.interval.lb < b.interval.lb ||
                     (a.interval.lb == b.interval.lb && a.path_id < b.path_id);
            });
  std::vector<std::string> lines;
  lines.push_back("# schema mpplan-plot-bounds-v1");
  lines.push_back("rank,path_id,lb,ub,exact,pruned");
  int rank = 0;
  for (const EvaluationRecord& r : records) {
    const bool pruned =
        std::binary_search(sel.pruned_ids.begin(), sel.pruned_ids.end(), r.path_id);
    std::ostringstream os;
    os << rank++ << "," << r.path_id << "," << csvio::fmt(r.interval.lb) << ","
       << csvio::fmt(r.interval.ub) << ","
       << (r.exact ? csvio::fmt(*r.exact) : std::string()) << "," << (pruned ? 1 : 0);
    lines.push_back(os.str());
  }
  return lines;
}

inline json pose_json(const Pose2& p) { return json{{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

/// Deterministic episode serialization (no wall-clock fields).
inline json episode_json(const EpisodeLog& episode) {
  json out;
  out["schema"] = "mpplan-episode-v1";
  out["reached_goal"] = episode.reached_goal;
  out["final_true_pose"] = pose_json(episode.final_true_pose);
  out["final_est_pose"] = pose_json(episode.final_est_pose);
  json sessions = json::array();
  for (const SessionLog& s : episode.sessions) {
    json js;
    js["step"] = s.step_index;
    js["true_pose"] = pose_json(s.true_pose);
    js["est_pose"] = pose_json(s.est_pose);
    js["dist_to_goal"] = s.dist_to_goal;
    js["chosen"] = s.selection.chosen_path_id;
    js["loss_bound"] = s.selection.loss_bound;
    js["pruned"] = s.selection.pruned_ids.size();
    js["survivors"] = s.selection.survivor_ids.size();
    js["separated"] = s.separated;
    json recs = json::array();
    for (const EvaluationRecord& r : s.records) {
      json jr;
      jr["path_id"] = r.path_id;
      jr["lb"] = r.interval.lb;
      jr["ub"] = r.interval.ub;
      if (r.exact) jr["exact"] = *r.exact;
      jr["rows"] = r.rows;
      recs.push_back(std::move(jr));
    }
    js["records"] = std::move(recs);
    sessions.push_back(std::move(js));
  }
  out["sessions"] = std::move(sessions);
  return out;
}

}  // namespace rundetail

// ---------------------------------------------------------------------------
// runScenario
// ---------------------------------------------------------------------------

struct RunReport {
  std::vector<EvaluationRecord> records;
  SelectionResult selection;
  bool separated = false;
  double one_time_s = 0.0;
  double evaluate_total_s = 0.0;  // last repeat
  double evaluate_mean_s = 0.0;
  double evaluate_std_s = 0.0;
  int repeats = 1;
  int prior_factor_count = 0;
  int state_dim = 0;
  json config_echo;
  std::filesystem::path output_dir;
};

inline RunReport run_scenario(ScenarioConfig cfg, const RunOptions& opts = {}) {
  rundetail::apply_overrides(cfg, opts);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  rundetail::ScenarioObjects sc = rundetail::build_scenario(cfg);
  PlanConfig plan = cfg.plan_config();
  plan.threads = std::max(1, opts.threads);

  // One discarded warm-up evaluation precedes timed repeats.
  const int repeats = std::max(1, opts.repeats);
  std::vector<double> eval_times;
  std::optional<PlanningSession> session;
  for (int r = repeats > 1 ? -1 : 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    PlanningSession s =
        evaluate_candidates(sc.prior.belief, sc.paths, cfg.motion_spec(), cfg.sensor_spec(), plan);
    if (plan.refine_budget > 0) s.refine_adaptive(plan.refine_budget);
    if (r >= 0) eval_times.push_back(detail::seconds_since(t0));
    session.emplace(std::move(s));
  }
  const SelectionResult sel = select_with_loss(session->records());

  RunReport report;
  report.records = session->records();
  report.selection = sel;
  report.separated = session->separated();
  report.one_time_s = session->one_time_seconds();
  report.evaluate_total_s = eval_times.back();
  const double mean = std::accumulate(eval_times.begin(), eval_times.end(), 0.0) / repeats;
  double var = 0.0;
  for (double t : eval_times) var += (t - mean) * (t - mean);
  report.evaluate_mean_s = mean;
  report.evaluate_std_s = repeats > 1 ? std::sqrt(var / (repeats - 1)) : 0.0;
  report.repeats = repeats;
  report.prior_factor_count = sc.prior.factor_count;
  report.state_dim = sc.prior.belief.dim();
  report.config_echo = cfg.echo;
  report.output_dir = dir;

  csvio::write_lines(dir / "records.csv", rundetail::records_csv(report.records, sel));
  csvio::write_lines(dir / "plot_bounds.csv", rundetail::plot_csv(report.records, sel));

  json jr;
  jr["schema"] = "mpplan-report-v1";
  jr["config"] = cfg.echo;
  jr["environment"] = rundetail::environment_fingerprint();
  jr["records_schema"] = "mpplan-records-v1";
  jr["prior"] = {{"factor_count", sc.prior.factor_count},
                 {"measurement_factors", sc.prior.measurement_factor_count},
                 {"state_dim", sc.prior.belief.dim()},
                 {"mapped_landmarks", sc.prior.mapped_landmarks.size()}};
  jr["selection"] = {{"chosen_path_id", sel.chosen_path_id},
                     {"loss_bound", sel.loss_bound},
                     {"pruned_count", sel.pruned_ids.size()},
                     {"survivor_count", sel.survivor_ids.size()},
                     {"separated", session->separated()}};
  const EvaluationRecord& chosen =
      report.records[static_cast<std::size_t>(sel.chosen_path_id)];
  jr["objective"] = {{"chosen_lb", chosen.interval.lb}, {"chosen_ub", chosen.interval.ub}};
  if (chosen.exact) jr["objective"]["chosen_exact"] = *chosen.exact;
  if (chosen.interval.lb != 0.0)
    jr["objective"]["loss_ratio"] = sel.loss_bound / std::abs(chosen.interval.lb);

  double phases = 0.0;
  json per_path = json::array();
  for (const EvaluationRecord& r : report.records) {
    phases += r.timings.assoc_s + r.timings.jacobian_s + r.timings.bounds_s +
              r.timings.exact_s;
    per_path.push_back({{"path_id", r.path_id},
                        {"assoc_s", r.timings.assoc_s},
                        {"jacobian_s", r.timings.jacobian_s},
                        {"bounds_s", r.timings.bounds_s},
                        {"exact_s", r.timings.exact_s}});
  }
  jr["timings"] = {{"one_time_s", report.one_time_s},
                   {"evaluate_total_s", report.evaluate_total_s},
                   {"evaluate_mean_s", report.evaluate_mean_s},
                   {"evaluate_std_s", report.evaluate_std_s},
                   {"repeats", repeats},
                   {"per_path_phase_total_s", phases},
                   {"per_path", std::move(per_path)}};

  if (cfg.replan_steps > 1) {
    ReplanSetup setup{cfg.motion_spec(), cfg.sensor_spec(), cfg.prm_params(), plan,
                      cfg.path_count, mix_seed(cfg.planning_seed, 0x45584543ull), 1.0};
    const EpisodeLog episode = replan_loop(sc.world, sc.prior.belief, sc.start, cfg.goal,
                                           cfg.replan_steps, setup);
    std::ofstream out(dir / "episode.json", std::ios::binary);
    out << rundetail::episode_json(episode).dump(2) << "\n";
    jr["episode"] = {{"sessions", episode.sessions.size()},
                     {"reached_goal", episode.reached_goal}};
  }

  std::ofstream out(dir / "report.json", std::ios::binary);
  out << jr.dump(2) << "\n";
  return report;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
  std::vector<double> values;
};

namespace rundetail {

/// The candidate with the most measurement rows (ties to the smaller id).
inline std::size_t richest_path(const GaussianBelief& belief,
                                const std::vector<CandidatePath>& paths,
                                const SensorSpec& sensor) {
  std::size_t best = 0;
  int best_rows = -1;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const DataAssociation a = predict_associations(belief, paths[i], sensor);
    const int rows = 2 * a.measurement_count();
    if (rows > best_rows) {
      best_rows = rows;
      best = i;
    }
  }
  return best;
}

}  // namespace rundetail

/// Convergence sweep rows: (|Z^s|, lb, ub, exact) as members move one at a
/// time from the complement into Z^s, for the scenario's richest candidate.
inline std::vector<std::array<double, 4>> convergence_sweep_rows(const ScenarioConfig& cfg) {
  rundetail::ScenarioObjects sc = rundetail::build_scenario(cfg);
  const SensorSpec sensor = cfg.sensor_spec();
  const MotionSpec motion = cfg.motion_spec();
  const std::size_t pick = rundetail::richest_path(sc.prior.belief, sc.paths, sensor);
  const DataAssociation assoc = predict_associations(sc.prior.belief, sc.paths[pick], sensor);
  const PlanningFactors pf =
      build_collective_jacobian(sc.prior.belief, sc.paths[pick], assoc, motion, sensor);
  const int m = pf.meas.num_components;
  if (m < 2) throw Error("convergence sweep needs a candidate with >= 2 components");

  const double exact = conditional_entropy_exact(pf.prop, pf.meas);
  const NodeId c1{1, 1}, c2{1, 2};
  PartitionTree tree =
      PartitionTree::build(m, 1, SplitStrategy::contiguous, cfg.planning_seed);
  // Empty Z^s start: push everything into the complement.
  tree = tree.move_members(c1, c2, tree.node(c1).members);

  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(cfg.planning_seed, 0x434f4e56ull));
  rng.shuffle(order);

  std::vector<std::array<double, 4>> rows;
  for (int k = 0;; ++k) {
    const std::vector<NodeId> cover{c1, c2};
    const double lb =
        lower_bound(pf.prop, pf.meas, make_lower_selection(tree, cover));
    const double ub = upper_bound(pf.prop, pf.meas, make_upper_selection(tree, c1));
    rows.push_back({static_cast<double>(k), lb, ub, exact});
    if (k == m) break;
    const int idx = order[static_cast<std::size_t>(k)];
    tree = tree.move_members(c2, c1, std::vector<int>{idx});
  }
  return rows;
}

/// Depth sweep rows: (depth, lb, ub) with the full-level cover and first-node
/// upper selection at each depth.
inline std::vector<std::array<double, 3>> depth_sweep_rows(const ScenarioConfig& cfg) {
  rundetail::ScenarioObjects sc = rundetail::build_scenario(cfg);
  const SensorSpec sensor = cfg.sensor_spec();
  const MotionSpec motion = cfg.motion_spec();
  const std::size_t pick = rundetail::richest_path(sc.prior.belief, sc.paths, sensor);
  const DataAssociation assoc = predict_associations(sc.prior.belief, sc.paths[pick], sensor);
  const PlanningFactors pf =
      build_collective_jacobian(sc.prior.belief, sc.paths[pick], assoc, motion, sensor);
  const int m = pf.meas.num_components;
  if (m < 2) throw Error("depth sweep needs a candidate with >= 2 components");

  std::vector<std::array<double, 3>> rows;
  const int dmax = PartitionTree::max_depth(m);
  for (int d = 0; d <= dmax; ++d) {
    const PartitionTree tree =
        PartitionTree::build(m, d, cfg.strategy, mix_seed(cfg.planning_seed, 0x4450ull));
    const BoundsInterval iv =
        detail::level_interval(pf.prop, pf.meas, tree, d, Backend::dense, nullptr);
    rows.push_back({static_cast<double>(d), iv.lb, iv.ub});
  }
  return rows;
}

/// Density sweep: vary prior-factor retention; candidate geometry and
/// associations are pinned to the sparsest level so the per-path measurement
/// load is constant while the prior state grows with density.
struct DensityRow {
  double keep_fraction = 0.0;
  double avg_landmarks_per_pose = 0.0;
  int state_dim = 0;
  double t_partitioned_s = 0.0;  // one-time recovery + ramdl bound evaluations
  double t_dense_s = 0.0;        // dense exact evaluations
};

inline std::vector<DensityRow> density_sweep_rows(const ScenarioConfig& cfg,
                                                  std::vector<double> fractions,
                                                  int path_budget) {
  std::sort(fractions.begin(), fractions.end());
  if (fractions.empty() || fractions.front() <= 0.0 || fractions.back() > 1.0)
    throw ConfigError("density sweep fractions must lie in (0, 1]");

  const World world = generate_world(cfg.world_config(), cfg.world_seed);
  const SensorSpec sensor = cfg.sensor_spec();
  const MotionSpec motion = cfg.motion_spec();
  const std::vector<Pose2> traj = cfg.trajectory_poses();
  const std::uint64_t salt = mix_seed(cfg.prior_seed, 0x44454e53ull);

  auto prior_at = [&](double f) {
    PriorOptions popt;
    popt.anchor_sigma = cfg.anchor_sigma;
    popt.keep_fraction = f;
    popt.prune_salt = salt;
    return prior_mapping(world, traj, motion, sensor, cfg.prior_seed, popt);
  };

  const PriorMappingResult sparsest = prior_at(fractions.front());
  const Pose2 start = cfg.start ? *cfg.start : traj.back();
  std::vector<CandidatePath> paths =
      prm_generate(world, start, cfg.goal, std::max(1, path_budget), cfg.prm_params());

  // Associations against the sparsest map; its landmarks exist at every level.
  std::vector<DataAssociation> assocs;
  assocs.reserve(paths.size());
  for (const CandidatePath& p : paths)
    assocs.push_back(predict_associations(sparsest.belief, p, sensor));

  std::vector<DensityRow> rows;
  for (double f : fractions) {
    const PriorMappingResult prior = prior_at(f);
    DensityRow row;
    row.keep_fraction = f;
    row.avg_landmarks_per_pose = static_cast<double>(prior.measurement_factor_count) /
                                 static_cast<double>(traj.size());
    row.state_dim = prior.belief.dim();

    // Build factors once per path; time the two evaluation routes on them.
    std::vector<PlanningFactors> factors;
    factors.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i)
      factors.push_back(
          build_collective_jacobian(prior.belief, paths[i], assocs[i], motion, sensor));

    // Partitioned route: one-time recovery plus per-path ramdl bound
    // evaluations. Two passes, keeping the less noisy one.
    row.t_partitioned_s = 1e300;
    for (int pass = 0; pass < 2; ++pass) {
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<VariableKey> involved;
      involved.push_back(prior.belief.index().last_pose().key);
      for (const DataAssociation& a : assocs)
        for (const auto& step : a.per_step)
          for (std::uint32_t id : step) involved.push_back(landmark_key(id));
      std::sort(involved.begin(), involved.end());
      involved.erase(std::unique(involved.begin(), involved.end()), involved.end());
      const double prior_logdet = logdet_exact(prior.belief.info());
      const CovarianceTable cov = recover_covariance_entries(prior.belief, involved);
      for (std::size_t i = 0; i < paths.size(); ++i) {
        const PlanningFactors& pf = factors[i];
        const RamdlInputs ramdl{prior_logdet, &cov, &pf.shared};
        const int m = pf.meas.num_components;
        if (m == 0) continue;
        const PartitionTree tree = PartitionTree::build(
            m, std::min(1, PartitionTree::max_depth(m)), SplitStrategy::seeded_random,
            mix_seed(cfg.planning_seed, static_cast<std::uint64_t>(i)));
        detail::level_interval(pf.prop, pf.meas, tree, tree.depth(), Backend::ramdl, &ramdl);
      }
      row.t_partitioned_s = std::min(row.t_partitioned_s, detail::seconds_since(t0));
    }

    const auto t0 = std::chrono::steady_clock::now();
    for (const PlanningFactors& pf : factors)
      conditional_entropy_exact(pf.prop, pf.meas);
    row.t_dense_s = detail::seconds_since(t0);
    rows.push_back(row);
  }
  return rows;
}

/// Synthetic determinant kernel for the partitioned-vs-full rAMDL timing:
/// m whitened rows over an N-dimensional planning-time state (no new
/// columns), split evenly into two component sets. Timings cover the
/// per-evaluation determinants only; the shared one-time covariance recovery
/// is excluded on both sides, as it is common to all candidates.
struct SpeedupRow {
  int m = 0;
  double t_full_s = 0.0;
  double t_partitioned_s = 0.0;
  double lb = 0.0, ub = 0.0, exact = 0.0;
};

inline SpeedupRow speedup_kernel(int m, int state_dim, std::uint64_t seed,
                                 int inner_iterations = 0) {
  if (m < 4 || m % 2 != 0) throw Error("speedup kernel needs an even m >= 4");
  if (state_dim < m) throw Error("speedup kernel expects state_dim >= m");
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));

  // Banded strictly diagonally dominant prior.
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(state_dim, state_dim);
  const int band = 4;
  for (int i = 0; i < state_dim; ++i)
    for (int k = 1; k <= band && i + k < state_dim; ++k) {
      const double v = rng.uniform(-0.25, 0.25);
      lambda(i, i + k) = v;
      lambda(i + k, i) = v;
    }
  for (int i = 0; i < state_dim; ++i)
    lambda(i, i) = 0.5 + lambda.row(i).cwiseAbs().sum();

  // Rows: a shared 3-column pose block plus one 2-column landmark block each.
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(m, state_dim);
  const int blocks = (state_dim - 3) / 2;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < 3; ++c) rows(r, c) = rng.uniform(-1.0, 1.0);
    const int b = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(blocks)));
    rows(r, 3 + 2 * b) = rng.uniform(-1.0, 1.0);
    rows(r, 3 + 2 * b + 1) = rng.uniform(-1.0, 1.0);
  }
  std::vector<int> row_component(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) row_component[static_cast<std::size_t>(r)] = r / 2;
  std::vector<int> old_cols(static_cast<std::size_t>(state_dim));
  std::iota(old_cols.begin(), old_cols.end(), 0);
  const CollectiveJacobian a{rows, row_component, m / 2, old_cols, {}};

  // One-time work, excluded from both timings.
  Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  const double prior_logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  std::vector<int> involved;
  for (int c = 0; c < state_dim; ++c)
    if (rows.col(c).cwiseAbs().maxCoeff() > 0.0) involved.push_back(c);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(state_dim, static_cast<Eigen::Index>(involved.size()));
  for (std::size_t i = 0; i < involved.size(); ++i)
    e(involved[i], static_cast<Eigen::Index>(i)) = 1.0;
  const Eigen::MatrixXd x = llt.solve(e);
  Eigen::MatrixXd sigma(involved.size(), involved.size());
  for (std::size_t i = 0; i < involved.size(); ++i)
    sigma.row(static_cast<Eigen::Index>(i)) = x.row(involved[i]);
  sigma = 0.5 * (sigma + sigma.transpose());
  const CovarianceTable cov = CovarianceTable::from_dense(sigma, involved);

  const PartitionTree tree = PartitionTree::build(m / 2, 1, SplitStrategy::contiguous);
  const CollectiveJacobian a_s = a.rows_for(tree.node({1, 1}).members);
  const CollectiveJacobian a_sbar = a.rows_for(tree.node({1, 2}).members);

  const double c_half = 0.5 * state_dim * log_two_pi_e();
  const double ld_s = ramdl_logdet(prior_logdet, cov, a_s);
  const double ld_sbar = ramdl_logdet(prior_logdet, cov, a_sbar);
  const double ld_full = ramdl_logdet(prior_logdet, cov, a);
  SpeedupRow row;
  row.m = m;
  row.exact = c_half - 0.5 * ld_full;
  row.ub = c_half - 0.5 * ld_s;
  row.lb = (c_half - 0.5 * ld_s) + (c_half - 0.5 * ld_sbar) -
           (c_half - 0.5 * prior_logdet);
  if (!(row.lb <= row.exact + 1e-9 && row.exact <= row.ub + 1e-9))
    throw Error("speedup kernel violated the sandwich property");

  // Dense cross-check of the full determinant (untimed).
  Eigen::MatrixXd posterior = lambda;
  posterior.noalias() += rows.transpose() * rows;
  const double ld_dense = llt_logdet(posterior, "speedup posterior");
  if (std::abs(ld_dense - ld_full) > 1e-8 * std::max({1.0, std::abs(ld_dense)}))
    throw Error("speedup kernel backend mismatch");

  int inner = inner_iterations > 0
                  ? inner_iterations
                  : std::max(4, static_cast<int>((1u << 23) /
                                                 (static_cast<unsigned>(m) *
                                                  static_cast<unsigned>(m))));
  // Warm-up.
  ramdl_logdet(prior_logdet, cov, a);
  ramdl_logdet(prior_logdet, cov, a_s);
  ramdl_logdet(prior_logdet, cov, a_sbar);

  auto t0 = std::chrono::steady_clock::now();
  double sink = 0.0;
  for (int i = 0; i < inner; ++i) sink += ramdl_logdet(prior_logdet, cov, a);
  row.t_full_s = detail::seconds_since(t0) / inner;

  t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < inner; ++i) {
    sink += ramdl_logdet(prior_logdet, cov, a_s);
    sink += ramdl_logdet(prior_logdet, cov, a_sbar);
  }
  row.t_partitioned_s = detail::seconds_since(t0) / inner;
  if (!std::isfinite(sink)) throw Error("non-finite determinant in timing loop");
  return row;
}

inline void run_sweep(const std::string& kind, ScenarioConfig cfg, const RunOptions& opts = {}) {
  rundetail::apply_overrides(cfg, opts);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  if (kind == "convergence") {
    const auto rows = convergence_sweep_rows(cfg);
    std::vector<std::string> lines{"# schema mpplan-sweep-convergence-v1",
                                   "s_size,lb,ub,exact"};
    for (const auto& r : rows) {
      std::ostringstream os;
      os << static_cast<int>(r[0]) << "," << csvio::fmt(r[1]) << "," << csvio::fmt(r[2]) << ","
         << csvio::fmt(r[3]);
      lines.push_back(os.str());
    }
    csvio::write_lines(dir / "sweep_convergence.csv", lines);
  } else if (kind == "depth") {
    const auto rows = depth_sweep_rows(cfg);
    std::vector<std::string> lines{"# schema mpplan-sweep-depth-v1", "depth,lb,ub,width"};
    for (const auto& r : rows) {
      std::ostringstream os;
      os << static_cast<int>(r[0]) << "," << csvio::fmt(r[1]) << "," << csvio::fmt(r[2]) << ","
         << csvio::fmt(r[2] - r[1]);
      lines.push_back(os.str());
    }
    csvio::write_lines(dir / "sweep_depth.csv", lines);
  } else if (kind == "density") {
    std::vector<double> fractions{0.4, 0.6, 0.8, 1.0};
    int budget = std::min(cfg.path_count, 60);
    if (cfg.sweep.is_object() && cfg.sweep.contains("density")) {
      const json& d = cfg.sweep.at("density");
      if (d.contains("keep_fractions"))
        fractions = d.at("keep_fractions").get<std::vector<double>>();
      if (d.contains("paths")) budget = d.at("paths").get<int>();
    }
    const auto rows = density_sweep_rows(cfg, fractions, budget);
    std::vector<std::string> lines{
        "# schema mpplan-sweep-density-v1",
        "keep_fraction,avg_landmarks_per_pose,state_dim,t_partitioned_s,t_dense_s"};
    for (const DensityRow& r : rows) {
      std::ostringstream os;
      os << csvio::fmt(r.keep_fraction) << "," << csvio::fmt(r.avg_landmarks_per_pose) << ","
         << r.state_dim << "," << csvio::fmt(r.t_partitioned_s) << ","
         << csvio::fmt(r.t_dense_s);
      lines.push_back(os.str());
    }
    csvio::write_lines(dir / "sweep_density.csv", lines);
  } else if (kind == "speedup") {
    std::vector<int> ms{64, 128, 256, 512};
    int inner = 0;
    int n_factor = 4;
    if (cfg.sweep.is_object() && cfg.sweep.contains("speedup")) {
      const json& s = cfg.sweep.at("speedup");
      if (s.contains("m")) ms = s.at("m").get<std::vector<int>>();
      if (s.contains("inner")) inner = s.at("inner").get<int>();
      if (s.contains("n_factor")) n_factor = s.at("n_factor").get<int>();
    }
    std::vector<std::string> lines{"# schema mpplan-sweep-speedup-v1",
                                   "m,t_full_s,t_partitioned_s,ratio"};
    for (int m : ms) {
      const SpeedupRow r = speedup_kernel(m, n_factor * m, cfg.planning_seed, inner);
      std::ostringstream os;
      os << r.m << "," << csvio::fmt(r.t_full_s) << "," << csvio::fmt(r.t_partitioned_s) << ","
         << csvio::fmt(r.t_full_s / r.t_partitioned_s);
      lines.push_back(os.str());
    }
    csvio::write_lines(dir / "sweep_speedup.csv", lines);
  } else {
    throw ConfigError("unknown sweep kind '" + kind +
                      "' (expected convergence, depth, density, or speedup)");
  }
}

}  // namespace mpplan
