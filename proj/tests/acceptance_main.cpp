// Acceptance suite: one pass/fail line per criterion, exit 1 on any failure.
//
// Every tolerance is pinned in code next to its check. Timing-based criteria
// (7, 8) expect an otherwise idle machine; run this binary serially.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mpplan/discrete_oracle.hpp"
#include "mpplan/entropy_bounds.hpp"
#include "mpplan/planner.hpp"
#include "mpplan/prm.hpp"
#include "mpplan/runner.hpp"
#include "mpplan/scenario.hpp"
#include "support/oracles.hpp"

using namespace mpplan;
namespace fs = std::filesystem;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Criterion {
  std::string name;
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// 1. Sandwich suite
// ---------------------------------------------------------------------------

Criterion sandwich_suite() {
  Criterion c;
  c.name = "sandwich-suite";
  const double t0 = now_s();
  const int instances = 1000;
  double worst_violation = 0.0;
  long checks = 0;
  for (int i = 0; i < instances; ++i) {
    const oracle::Instance inst =
        oracle::random_instance(9000 + static_cast<std::uint64_t>(i), 6, 200, 2, 64);
    const int m = inst.a.num_components;
    const double exact = conditional_entropy_exact(inst.prop, inst.a);
    for (int d = 0; d <= PartitionTree::max_depth(m); ++d) {
      const PartitionTree tree = PartitionTree::build(
          m, d, SplitStrategy::seeded_random, static_cast<std::uint64_t>(i));
      const BoundsInterval iv = partitioned_bounds(
          inst.prop, inst.a, make_upper_selection(tree, NodeId{d, 1}),
          make_level_lower_selection(tree, d));
      worst_violation = std::max(worst_violation, iv.lb - exact);
      worst_violation = std::max(worst_violation, exact - iv.ub);
      ++checks;
    }
  }
  const double elapsed = now_s() - t0;
  c.pass = worst_violation <= 1e-9 && elapsed < 60.0;
  std::ostringstream os;
  os << instances << " instances, " << checks << " intervals, worst violation "
     << worst_violation << ", " << elapsed << " s";
  c.detail = os.str();
  return c;
}

// ---------------------------------------------------------------------------
// 2. Backend equivalence
// ---------------------------------------------------------------------------

Criterion backend_equivalence() {
  Criterion c;
  c.name = "backend-equivalence";
  double worst = 0.0;
  const int instances = 500;
  for (int i = 0; i < instances; ++i) {
    const std::uint64_t seed = 20000 + static_cast<std::uint64_t>(i);
    oracle::RamdlInstance inst = [&] {
      switch (i % 4) {
        case 0:  // general SLAM shape
          return oracle::ramdl_instance(seed, 40 + (i % 60), 3 * (1 + i % 4), 8 + i % 40);
        case 1:  // A_new empty
          return oracle::ramdl_instance(seed, 30 + (i % 80), 0, 6 + i % 32);
        case 2:  // pure-new measurement rows
          return oracle::ramdl_instance(seed, 20 + (i % 40), 3 * (1 + i % 3), 6 + i % 20, true);
        default:  // larger state
          return oracle::ramdl_instance(seed, 120 + (i % 60), 12, 16 + i % 48);
      }
    }();
    const double fast = ramdl_logdet(inst.prior_logdet, inst.cov, inst.a);
    const double dense = oracle::dense_posterior_logdet(inst);
    worst = std::max(worst, oracle::rel_diff(fast, dense));
  }
  c.pass = worst <= 1e-8;
  std::ostringstream os;
  os << instances << " instances, worst relative gap " << worst;
  c.detail = os.str();
  return c;
}

// ---------------------------------------------------------------------------
// 3. Discrete oracle
// ---------------------------------------------------------------------------

Criterion discrete_oracle() {
  Criterion c;
  c.name = "discrete-oracle";
  double worst_factorization = 0.0, worst_sandwich = 0.0, worst_endpoint = 0.0;
  const int joints = 500;
  for (int i = 0; i < joints; ++i) {
    const std::uint64_t seed = 30000 + static_cast<std::uint64_t>(i);
    Rng rng(seed);
    const int x_card = 2 + static_cast<int>(rng.bounded(15));       // up to 16
    const int comps = 2 + static_cast<int>(rng.bounded(11));        // up to 12
    const DiscreteJoint j = oracle::random_ci_joint(seed, x_card, comps);

    const double exact = cond_entropy_brute(j);
    std::vector<int> all(static_cast<std::size_t>(comps));
    std::iota(all.begin(), all.end(), 0);
    const double factored = subset_entropy_z_given_x(j, all) + marginal_x_entropy(j) -
                         joint_entropy_z(j);
    worst_factorization = std::max(worst_factorization, std::abs(exact - factored));

    const PartitionTree tree =
        PartitionTree::build(comps, 1, SplitStrategy::seeded_random, seed);
    const BoundsInterval iv = bounds_brute(j, make_upper_selection(tree, {1, 1}),
                                           make_level_lower_selection(tree, 1));
    worst_sandwich = std::max(worst_sandwich, iv.lb - exact);
    worst_sandwich = std::max(worst_sandwich, exact - iv.ub);

    PartitionTree all_in = tree.move_members({1, 2}, {1, 1}, tree.node({1, 2}).members);
    const BoundsInterval end = bounds_brute(j, make_upper_selection(all_in, {1, 1}),
                                            make_level_lower_selection(all_in, 1));
    worst_endpoint = std::max({worst_endpoint, std::abs(end.lb - exact),
                               std::abs(end.ub - exact)});
  }

  // Worked copied-bit case: exact 0, UB 0, LB -ln 2.
  std::vector<double> table(8, 0.0);
  table[0] = 0.5;
  table[7] = 0.5;
  const DiscreteJoint copied(2, {2, 2}, table);
  const PartitionTree tree = PartitionTree::build(2, 1, SplitStrategy::contiguous);
  const BoundsInterval iv = bounds_brute(copied, make_upper_selection(tree, {1, 1}),
                                         make_level_lower_selection(tree, 1));
  const bool worked = std::abs(cond_entropy_brute(copied)) <= 1e-15 &&
                      std::abs(iv.ub) <= 1e-15 &&
                      std::abs(iv.lb + std::log(2.0)) <= 1e-15;

  c.pass = worst_factorization <= 1e-12 && worst_sandwich <= 1e-12 && worst_endpoint <= 1e-12 &&
           worked;
  std::ostringstream os;
  os << joints << " joints, factorization gap " << worst_factorization << ", sandwich violation "
     << worst_sandwich << ", endpoint gap " << worst_endpoint << ", worked case "
     << (worked ? "ok" : "WRONG");
  c.detail = os.str();
  return c;
}

// ---------------------------------------------------------------------------
// 4. Hierarchy chain
// ---------------------------------------------------------------------------

Criterion hierarchy_chain() {
  Criterion c;
  c.name = "hierarchy-chain";
  double worst_chain = 0.0, worst_dominance = 0.0;
  const int instances = 200;
  for (int i = 0; i < instances; ++i) {
    const oracle::Instance inst =
        oracle::random_instance(40000 + static_cast<std::uint64_t>(i), 10, 120, 24, 64);
    const int m = inst.a.num_components;
    const PartitionTree tree =
        PartitionTree::build(m, 3, SplitStrategy::seeded_random, static_cast<std::uint64_t>(i));

    const double lb1 = g_operator(inst.prop, inst.a, tree.node({1, 1}).members,
                                  tree.node({1, 2}).members);
    const double lb2 = g_operator(inst.prop, inst.a, tree.node({2, 1}).members,
                                  tree.node({2, 2}).members) +
                       g_operator(inst.prop, inst.a, {}, tree.node({1, 2}).members);
    const double lb3 = g_operator(inst.prop, inst.a, tree.node({2, 1}).members,
                                  tree.node({2, 2}).members) +
                       g_operator(inst.prop, inst.a, tree.node({2, 3}).members,
                                  tree.node({2, 4}).members) +
                       g_operator(inst.prop, inst.a, {}, {});
    worst_chain = std::max({worst_chain, lb2 - lb1, lb3 - lb2});

    // Child-node upper bounds dominate their parent's conditional entropy.
    for (int level = 0; level < 3; ++level) {
      for (NodeId id : tree.level_ids(level)) {
        const double parent = conditional_entropy_for(inst.prop, inst.a,
                                                      tree.node(id).members);
        for (NodeId ch : {PartitionTree::child1(id), PartitionTree::child2(id)}) {
          const double child = conditional_entropy_for(inst.prop, inst.a,
                                                       tree.node(ch).members);
          worst_dominance = std::max(worst_dominance, parent - child);
        }
      }
    }
  }
  c.pass = worst_chain <= 1e-9 && worst_dominance <= 1e-9;
  std::ostringstream os;
  os << instances << " instances, chain violation " << worst_chain
     << ", dominance violation " << worst_dominance;
  c.detail = os.str();
  return c;
}

// ---------------------------------------------------------------------------
// Shared scenario configuration helpers
// ---------------------------------------------------------------------------

json sweep_scenario_config(const std::string& out_dir) {
  json j;
  j["world"] = {{"bounds", {0.0, 0.0, 100.0, 100.0}},
                {"landmark_count", 150},
                {"seed", 71}};
  j["sensor"] = {{"max_range", 14.0}, {"sigma_range", 0.1}, {"sigma_bearing_deg", 1.0}};
  j["motion"] = {{"sigma_xy", 0.1}, {"sigma_theta_deg", 0.6}};
  j["prior"] = {{"seed", 72},
                {"trajectory",
                 {{"kind", "line"}, {"from", {15.0, 30.0}}, {"to", {70.0, 45.0}}, {"poses", 10}}}};
  j["planning"] = {{"seed", 73},
                   {"path_count", 20},
                   {"prm_samples", 170},
                   {"goal", {30.0, 75.0}},
                   {"backend", "dense"}};
  j["output_dir"] = out_dir;
  return j;
}

// ---------------------------------------------------------------------------
// 5. Convergence sweep
// ---------------------------------------------------------------------------

Criterion convergence_sweep() {
  Criterion c;
  c.name = "convergence-sweep";
  const ScenarioConfig cfg = parse_scenario(sweep_scenario_config("unused"));
  const auto conv = convergence_sweep_rows(cfg);
  const double exact = conv[0][3];
  bool ub_monotone = true, sandwich = true;
  double prev_ub = 1e300;
  for (const auto& r : conv) {
    if (r[2] > prev_ub + 1e-9) ub_monotone = false;
    if (r[1] > exact + 1e-9 || r[2] < exact - 1e-9) sandwich = false;
    prev_ub = r[2];
  }
  const bool terminates = std::abs(conv.back()[1] - exact) <= 1e-9 &&
                          std::abs(conv.back()[2] - exact) <= 1e-9;

  const auto depth = depth_sweep_rows(cfg);
  bool widths_grow = true;
  for (std::size_t i = 1; i < depth.size(); ++i) {
    const double w_prev = depth[i - 1][2] - depth[i - 1][1];
    const double w_cur = depth[i][2] - depth[i][1];
    if (w_cur < w_prev - 1e-9) widths_grow = false;
  }
  c.pass = ub_monotone && sandwich && terminates && widths_grow;
  std::ostringstream os;
  os << conv.size() << " move steps (ub monotone " << (ub_monotone ? "yes" : "NO")
     << ", terminates " << (terminates ? "yes" : "NO") << "), " << depth.size()
     << " depths (widths non-decreasing " << (widths_grow ? "yes" : "NO") << ")";
  c.detail = os.str();
  return c;
}

// ---------------------------------------------------------------------------
// 6. Pruning soundness and loss audit
// ---------------------------------------------------------------------------

Criterion pruning_and_loss() {
  Criterion c;
  c.name = "pruning-loss-audit";
  const int scenarios = 100;
  int unsound = 0, loss_violations = 0, separated_count = 0, agreement_failures = 0;
  long total_pruned = 0, total_paths = 0;
  double worst_prune_margin = 1e300;

  for (int s = 0; s < scenarios; ++s) {
    const std::uint64_t seed = 50000 + static_cast<std::uint64_t>(s);
    Rng rng(seed);
    WorldConfig wc;
    wc.bounds = {0.0, 0.0, 100.0, 100.0};
    wc.landmark_count = 80 + static_cast<int>(rng.bounded(80));
    const World world = generate_world(wc, seed);

    SensorSpec sensor;
    sensor.max_range = 10.0 + rng.uniform(0.0, 6.0);
    sensor.noise = Eigen::Vector2d(0.01, 0.0003).asDiagonal();
    const MotionSpec motion =
        planar_odometry(Eigen::Vector3d(0.01, 0.01, 0.001).asDiagonal());

    std::vector<Pose2> traj;
    const double x0 = 15.0 + rng.uniform(0.0, 10.0);
    const double y0 = 25.0 + rng.uniform(0.0, 20.0);
    for (int i = 0; i < 8; ++i)
      traj.push_back({x0 + 6.0 * i, y0, 0.0});
    const PriorMappingResult prior =
        prior_mapping(world, traj, motion, sensor, mix_seed(seed, 1));

    PrmParams prm{180, 9, mix_seed(seed, 2)};
    const Vec2 goal(20.0 + rng.uniform(0.0, 20.0), 65.0 + rng.uniform(0.0, 20.0));
    std::vector<CandidatePath> paths;
    try {
      paths = prm_generate(world, traj.back(), goal, 100, prm);
    } catch (const GoalUnreachable&) {
      continue;
    }

    PlanConfig cfg;
    cfg.partition_depth = 2;
    cfg.strategy = SplitStrategy::seeded_random;
    cfg.partition_seed = mix_seed(seed, 3);
    cfg.backend = Backend::ramdl;
    cfg.goal = goal;
    cfg.exact_eval = true;
    cfg.refine_budget = 12;
    PlanningSession session = evaluate_candidates(prior.belief, paths, motion, sensor, cfg);
    session.refine_adaptive(cfg.refine_budget);
    const SelectionResult sel = select_with_loss(session.records());

    double min_exact = 1e300;
    for (const EvaluationRecord& r : session.records())
      min_exact = std::min(min_exact, *r.exact);
    // A pruned path must never beat the optimum; ties at floating-point
    // noise (identical dead-reckoning candidates) are co-optima, not
    // violations.
    for (int id : sel.pruned_ids) {
      const double margin =
          *session.records()[static_cast<std::size_t>(id)].exact - min_exact;
      worst_prune_margin = std::min(worst_prune_margin, margin);
      if (margin < -1e-9) ++unsound;
    }
    const double actual_loss =
        *session.records()[static_cast<std::size_t>(sel.chosen_path_id)].exact - min_exact;
    if (actual_loss > sel.loss_bound + 1e-9) ++loss_violations;
    if (session.separated()) {
      ++separated_count;
      if (*session.records()[static_cast<std::size_t>(sel.chosen_path_id)].exact >
          min_exact + 1e-9)
        ++agreement_failures;
    }
    total_pruned += static_cast<long>(sel.pruned_ids.size());
    total_paths += static_cast<long>(paths.size());
  }

  c.pass = unsound == 0 && loss_violations == 0 && agreement_failures == 0;
  std::ostringstream os;
  os << scenarios << " scenarios, pruned " << total_pruned << "/" << total_paths
     << " paths, unsound prunes " << unsound << " (worst margin " << worst_prune_margin
     << "), loss violations " << loss_violations << ", separated " << separated_count
     << " (selection mismatches " << agreement_failures << ")";
  c.detail = os.str();
  return c;
}

// ---------------------------------------------------------------------------
// 7. Speedup
// ---------------------------------------------------------------------------

Criterion speedup() {
  Criterion c;
  c.name = "speedup";
  std::ostringstream os;
  bool pass = true;
  for (int m : {64, 128, 256, 512}) {
    const SpeedupRow row = speedup_kernel(m, 4 * m, 424242);
    const double ratio = row.t_full_s / row.t_partitioned_s;
    if (m >= 256 && ratio < 2.0) pass = false;
    os << "m=" << m << " ratio " << std::round(ratio * 100.0) / 100.0 << "  ";
  }
  c.pass = pass;
  c.detail = os.str() + (pass ? "(>=2.0 at m>=256)" : "(below 2.0 at m>=256)");
  return c;
}

// ---------------------------------------------------------------------------
// 8. Density sensitivity
// ---------------------------------------------------------------------------

Criterion density_sensitivity() {
  Criterion c;
  c.name = "density-sensitivity";
  json j;
  j["world"] = {{"bounds", {0.0, 0.0, 100.0, 100.0}},
                {"landmark_count", 700},
                {"seed", 81}};
  j["sensor"] = {{"max_range", 14.0}, {"sigma_range", 0.1}, {"sigma_bearing_deg", 1.0}};
  j["motion"] = {{"sigma_xy", 0.1}, {"sigma_theta_deg", 0.6}};
  j["prior"] = {{"seed", 82},
                {"trajectory",
                 {{"kind", "loop"}, {"center", {50.0, 50.0}}, {"radius", 30.0},
                  {"poses", 30}}}};
  j["planning"] = {{"seed", 83},
                   {"path_count", 150},
                   {"prm_samples", 260},
                   {"goal", {20.0, 50.0}},
                   {"backend", "ramdl"}};
  const ScenarioConfig cfg = parse_scenario(j);
  const std::vector<double> fractions{0.22, 0.35, 0.5, 1.0};
  const auto rows = density_sweep_rows(cfg, fractions, 150);

  double part_min = 1e300, part_max = 0.0;
  bool dense_monotone = true, density_monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    part_min = std::min(part_min, rows[i].t_partitioned_s);
    part_max = std::max(part_max, rows[i].t_partitioned_s);
    if (i > 0 && rows[i].t_dense_s <= rows[i - 1].t_dense_s) dense_monotone = false;
    if (i > 0 && rows[i].avg_landmarks_per_pose <= rows[i - 1].avg_landmarks_per_pose)
      density_monotone = false;
  }
  const double variation = (part_max - part_min) / part_min;
  c.pass = variation < 0.25 && dense_monotone && density_monotone;
  std::ostringstream os;
  os << rows.size() << " levels, state " << rows.front().state_dim << "->"
     << rows.back().state_dim << ", partitioned variation "
     << std::round(variation * 1000.0) / 10.0 << "%, dense "
     << std::round(rows.front().t_dense_s * 1000.0) << "ms->"
     << std::round(rows.back().t_dense_s * 1000.0) << "ms ("
     << (dense_monotone ? "monotone" : "NOT monotone") << ")";
  c.detail = os.str();
  return c;
}

// ---------------------------------------------------------------------------
// 9. Determinism
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Criterion determinism() {
  Criterion c;
  c.name = "determinism";
  const fs::path base = fs::temp_directory_path() / "mpplan_acceptance";
  fs::remove_all(base);
  json j = sweep_scenario_config((base / "a").string());
  j["planning"]["path_count"] = 40;
  j["planning"]["backend"] = "ramdl";
  run_scenario(parse_scenario(j));
  j["output_dir"] = (base / "b").string();
  run_scenario(parse_scenario(j));
  const bool identical = slurp(base / "a" / "records.csv") == slurp(base / "b" / "records.csv") &&
                         !slurp(base / "a" / "records.csv").empty();
  c.pass = identical;
  c.detail = identical ? "records.csv byte-identical across reruns"
                       : "records.csv differs between identical runs";
  return c;
}

}  // namespace

int main() {
  std::vector<std::function<Criterion()>> criteria{
      sandwich_suite,     backend_equivalence, discrete_oracle,
      hierarchy_chain,    convergence_sweep,   pruning_and_loss,
      speedup,            density_sensitivity, determinism};

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Criterion c;
    try {
      c = criteria[i]();
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
      c.name = "criterion-" + std::to_string(i + 1);
    }
    std::printf("[%s] %zu. %-22s %s\n", c.pass ? "PASS" : "FAIL", i + 1, c.name.c_str(),
                c.detail.c_str());
    std::fflush(stdout);
    if (!c.pass) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
