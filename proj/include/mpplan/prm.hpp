#pragma once

/**
 * Probabilistic roadmap candidate-path generation. Uniform samples are
 * connected to their k nearest neighbors through collision checks, and the
 * requested number of shortest distinct start-to-goal paths is extracted
 * with Yen's algorithm (Dijkstra inside). Deterministic given the seed; all
 * ties break on node indices.
 */

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "mpplan/errors.hpp"
#include "mpplan/rng.hpp"
#include "mpplan/slam_sim.hpp"

namespace mpplan {

struct PrmParams {
  int samples = 500;
  int k_nearest = 8;
  std::uint64_t seed = 0;
};

namespace detail {

struct Roadmap {
  std::vector<Vec2> points;                        // 0 = start, 1 = goal
  std::vector<std::vector<std::pair<int, double>>> adj;  // sorted by neighbor id
};

inline Roadmap build_roadmap(const World& world, const Vec2& start, const Vec2& goal,
                             const PrmParams& params) {
  Roadmap rm;
  rm.points.push_back(start);
  rm.points.push_back(goal);
  Rng rng(mix_seed(params.seed, 0x50524dull));
  for (int i = 0; i < params.samples; ++i) {
    Vec2 p;
    int attempts = 0;
    do {
      p = Vec2(rng.uniform(world.bounds.xmin, world.bounds.xmax),
               rng.uniform(world.bounds.ymin, world.bounds.ymax));
      if (++attempts > 10000) throw InfeasibleConfig("could not sample a free roadmap point");
    } while (!geom::point_free(p, world.obstacles));
    rm.points.push_back(p);
  }

  const int n = static_cast<int>(rm.points.size());
  rm.adj.assign(static_cast<std::size_t>(n), {});
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> near;
    for (int j = 0; j < n; ++j)
      if (j != i) near.emplace_back((rm.points[static_cast<std::size_t>(j)] -
                                     rm.points[static_cast<std::size_t>(i)]).norm(), j);
    std::sort(near.begin(), near.end());
    const int k = std::min<int>(params.k_nearest, static_cast<int>(near.size()));
    for (int t = 0; t < k; ++t) {
      const int j = near[static_cast<std::size_t>(t)].second;
      const auto key = std::minmax(i, j);
      if (edges.count({key.first, key.second})) continue;
      if (!geom::segment_free(rm.points[static_cast<std::size_t>(i)],
                              rm.points[static_cast<std::size_t>(j)], world.obstacles))
        continue;
      edges.insert({key.first, key.second});
    }
  }
  for (const auto& [a, b] : edges) {
    const double d = (rm.points[static_cast<std::size_t>(a)] -
                      rm.points[static_cast<std::size_t>(b)]).norm();
    rm.adj[static_cast<std::size_t>(a)].emplace_back(b, d);
    rm.adj[static_cast<std::size_t>(b)].emplace_back(a, d);
  }
  for (auto& a : rm.adj) std::sort(a.begin(), a.end());
  return rm;
}

/// Dijkstra from `src` to `dst`, ignoring banned nodes/edges. Returns the node
/// sequence or empty when unreachable.
inline std::vector<int> dijkstra(const Roadmap& rm, int src, int dst,
                                 const std::set<int>& banned_nodes,
                                 const std::set<std::pair<int, int>>& banned_edges,
                                 double* cost_out = nullptr) {
  const int n = static_cast<int>(rm.points.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(n), inf);
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  if (banned_nodes.count(src)) return {};
  dist[static_cast<std::size_t>(src)] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    if (u == dst) break;
    for (const auto& [v, w] : rm.adj[static_cast<std::size_t>(u)]) {
      if (banned_nodes.count(v)) continue;
      if (banned_edges.count({u, v})) continue;
      const double nd = d + w;
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        parent[static_cast<std::size_t>(v)] = u;
        pq.push({nd, v});
      }
    }
  }
  if (dist[static_cast<std::size_t>(dst)] == inf) return {};
  if (cost_out) *cost_out = dist[static_cast<std::size_t>(dst)];
  std::vector<int> path;
  for (int v = dst; v != -1; v = parent[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

inline double path_cost(const Roadmap& rm, const std::vector<int>& nodes) {
  double c = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i)
    c += (rm.points[static_cast<std::size_t>(nodes[i])] -
          rm.points[static_cast<std::size_t>(nodes[i - 1])]).norm();
  return c;
}

/// Yen's k-shortest loopless paths between node 0 and node 1.
inline std::vector<std::vector<int>> k_shortest(const Roadmap& rm, int count) {
  std::vector<std::vector<int>> accepted;
  double c0 = 0.0;
  std::vector<int> first = dijkstra(rm, 0, 1, {}, {}, &c0);
  if (first.empty()) throw GoalUnreachable("no roadmap path from start to goal");
  accepted.push_back(std::move(first));

  // Candidates ordered by (cost, node sequence) for determinism.
  std::set<std::pair<double, std::vector<int>>> candidates;
  while (static_cast<int>(accepted.size()) < count) {
    const std::vector<int>& prev = accepted.back();
    for (std::size_t i = 0; i + 1 < prev.size(); ++i) {
      const int spur = prev[i];
      const std::vector<int> root(prev.begin(), prev.begin() + static_cast<std::ptrdiff_t>(i) + 1);

      std::set<std::pair<int, int>> banned_edges;
      for (const std::vector<int>& p : accepted) {
        if (p.size() > i + 1 && std::equal(root.begin(), root.end(), p.begin())) {
          banned_edges.insert({p[i], p[i + 1]});
          banned_edges.insert({p[i + 1], p[i]});
        }
      }
      std::set<int> banned_nodes(root.begin(), root.end() - 1);

      std::vector<int> spur_path = dijkstra(rm, spur, 1, banned_nodes, banned_edges);
      if (spur_path.empty()) continue;
      std::vector<int> total(root.begin(), root.end() - 1);
      total.insert(total.end(), spur_path.begin(), spur_path.end());
      candidates.insert({path_cost(rm, total), std::move(total)});
    }
    bool pushed = false;
    while (!candidates.empty()) {
      auto it = candidates.begin();
      std::vector<int> next = it->second;
      candidates.erase(it);
      if (std::find(accepted.begin(), accepted.end(), next) == accepted.end()) {
        accepted.push_back(std::move(next));
        pushed = true;
        break;
      }
    }
    if (!pushed) break;  // roadmap exhausted
  }
  return accepted;
}

}  // namespace detail

/// The `count` shortest distinct collision-free start-to-goal paths (fewer if
/// the roadmap holds fewer). Throws GoalUnreachable when no path exists.
inline std::vector<CandidatePath> prm_generate(const World& world, const Pose2& start,
                                               const Vec2& goal, int count,
                                               const PrmParams& params) {
  const Vec2 start_pos(start.x, start.y);
  if (!world.bounds.contains(start_pos) || !geom::point_free(start_pos, world.obstacles))
    throw InfeasibleConfig("start pose is not collision-free");
  if (!world.bounds.contains(goal) || !geom::point_free(goal, world.obstacles))
    throw InfeasibleConfig("goal is not collision-free");
  if (count < 1) throw InfeasibleConfig("path count must be >= 1");

  const detail::Roadmap rm = detail::build_roadmap(world, start_pos, goal, params);
  const std::vector<std::vector<int>> routes = detail::k_shortest(rm, count);

  std::vector<CandidatePath> out;
  out.reserve(routes.size());
  for (const std::vector<int>& r : routes) {
    std::vector<Vec2> wps;
    wps.reserve(r.size());
    for (int n : r) wps.push_back(rm.points[static_cast<std::size_t>(n)]);
    out.push_back(make_path(start, wps));
  }
  return out;
}

}  // namespace mpplan
