#pragma once

/**
 * Binary partition hierarchy over an index set of observation components
 * (discrete case) or measurement-Jacobian row groups (Gaussian case).
 *
 * A node is addressed by (level, number) with the root at (0, 1) and the
 * children of (i, n) at (i+1, 2n-1) and (i+1, 2n). Every non-leaf node has
 * exactly two children whose member sets partition the parent's members.
 * Empty nodes are permitted; they are needed to express selections like
 * g(empty, Z-complement) and the convergence endpoints.
 *
 * Splits are deterministic given (member count, depth, strategy, seed), and
 * the split of a node depends only on its own (level, number) stream, so a
 * deeper tree is a refinement of a shallower one built with the same inputs.
 */

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mpplan/errors.hpp"
#include "mpplan/rng.hpp"

namespace mpplan {

enum class SplitStrategy { interleaved, contiguous, seeded_random };

inline const char* to_string(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::interleaved: return "interleaved";
    case SplitStrategy::contiguous: return "contiguous";
    case SplitStrategy::seeded_random: return "seeded-random";
  }
  return "?";
}

struct NodeId {
  int level = 0;
  int number = 1;  // 1-based within the level

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline std::string to_string(const NodeId& id) {
  std::ostringstream os;
  os << "(" << id.level << "," << id.number << ")";
  return os.str();
}

struct PartitionNode {
  NodeId id;
  NodeId parent;                // root's parent is itself
  std::vector<int> members;     // sorted component indices
};

class PartitionTree {
 public:
  /// ceil(log2(m)); the deepest meaningful hierarchy for m components.
  static int max_depth(int member_count) {
    int d = 0;
    int cap = 1;
    while (cap < member_count) {
      cap *= 2;
      ++d;
    }
    return d;
  }

  static PartitionTree build(int member_count, int depth, SplitStrategy strategy,
                             std::uint64_t seed = 0) {
    if (member_count < 1) throw InvalidCover("partition tree needs at least one member");
    if (depth < 0 || depth > max_depth(member_count))
      throw DepthTooLarge("requested depth " + std::to_string(depth) +
                          " exceeds ceil(log2(" + std::to_string(member_count) + "))");
    PartitionTree t;
    t.strategy_ = strategy;
    t.seed_ = seed;
    t.member_count_ = member_count;
    t.levels_.resize(static_cast<std::size_t>(depth) + 1);

    std::vector<int> root(static_cast<std::size_t>(member_count));
    for (int i = 0; i < member_count; ++i) root[static_cast<std::size_t>(i)] = i;
    t.levels_[0].push_back({{0, 1}, {0, 1}, std::move(root)});
    for (int level = 0; level < depth; ++level) t.split_level(level);
    return t;
  }

  int depth() const { return static_cast<int>(levels_.size()) - 1; }
  int member_count() const { return member_count_; }
  SplitStrategy strategy() const { return strategy_; }
  std::uint64_t seed() const { return seed_; }

  const PartitionNode& node(NodeId id) const {
    if (id.level < 0 || id.level > depth()) throw NotMembers("no such level " + to_string(id));
    const auto& lvl = levels_[static_cast<std::size_t>(id.level)];
    if (id.number < 1 || id.number > static_cast<int>(lvl.size()))
      throw NotMembers("no such node " + to_string(id));
    return lvl[static_cast<std::size_t>(id.number - 1)];
  }

  const std::vector<int>& root_members() const { return levels_[0][0].members; }

  std::vector<NodeId> level_ids(int level) const {
    std::vector<NodeId> out;
    if (level < 0 || level > depth()) return out;
    for (int n = 1; n <= static_cast<int>(levels_[static_cast<std::size_t>(level)].size()); ++n)
      out.push_back({level, n});
    return out;
  }

  static NodeId child1(NodeId id) { return {id.level + 1, 2 * id.number - 1}; }
  static NodeId child2(NodeId id) { return {id.level + 1, 2 * id.number}; }
  static NodeId sibling(NodeId id) {
    return {id.level, id.number % 2 == 1 ? id.number + 1 : id.number - 1};
  }

  /// Transfer `indices` from one sibling to the other; descendants of both are
  /// rebuilt with the tree's strategy. Returns the new tree.
  PartitionTree move_members(NodeId from, NodeId to, std::span<const int> indices) const {
    const PartitionNode& f = node(from);
    const PartitionNode& t = node(to);
    if (from.level == 0 || from.level != to.level || f.parent != t.parent || from == to)
      throw NotSiblings("nodes " + to_string(from) + " and " + to_string(to) +
                        " are not siblings");
    for (int idx : indices)
      if (!std::binary_search(f.members.begin(), f.members.end(), idx))
        throw NotMembers("index " + std::to_string(idx) + " is not a member of " +
                         to_string(from));

    PartitionTree out = *this;
    std::set<int> moved(indices.begin(), indices.end());
    auto& fm = out.levels_[static_cast<std::size_t>(from.level)]
                   [static_cast<std::size_t>(from.number - 1)].members;
    auto& tm = out.levels_[static_cast<std::size_t>(to.level)]
                   [static_cast<std::size_t>(to.number - 1)].members;
    std::vector<int> keep;
    keep.reserve(fm.size());
    for (int idx : fm)
      if (!moved.count(idx)) keep.push_back(idx);
    fm = std::move(keep);
    tm.insert(tm.end(), moved.begin(), moved.end());
    std::sort(tm.begin(), tm.end());

    out.rebuild_subtree(from);
    out.rebuild_subtree(to);
    return out;
  }

 private:
  std::vector<std::vector<PartitionNode>> levels_;
  SplitStrategy strategy_ = SplitStrategy::seeded_random;
  std::uint64_t seed_ = 0;
  int member_count_ = 0;

  /// Children member sets of a node. The first child gets the extra member on
  /// odd sizes; member sets are kept sorted.
  std::pair<std::vector<int>, std::vector<int>> split_members(NodeId id,
                                                              const std::vector<int>& m) const {
    std::vector<int> first, second;
    const std::size_t take = (m.size() + 1) / 2;
    switch (strategy_) {
      case SplitStrategy::contiguous: {
        first.assign(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(take));
        second.assign(m.begin() + static_cast<std::ptrdiff_t>(take), m.end());
        break;
      }
      case SplitStrategy::interleaved: {
        for (std::size_t i = 0; i < m.size(); ++i)
          (i % 2 == 0 ? first : second).push_back(m[i]);
        break;
      }
      case SplitStrategy::seeded_random: {
        std::vector<int> perm = m;
        Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(id.level),
                         static_cast<std::uint64_t>(id.number)));
        rng.shuffle(perm);
        first.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(take));
        second.assign(perm.begin() + static_cast<std::ptrdiff_t>(take), perm.end());
        std::sort(first.begin(), first.end());
        std::sort(second.begin(), second.end());
        break;
      }
    }
    return {std::move(first), std::move(second)};
  }

  void split_level(int level) {
    auto& next = levels_[static_cast<std::size_t>(level) + 1];
    next.clear();
    for (const PartitionNode& parent : levels_[static_cast<std::size_t>(level)]) {
      auto [a, b] = split_members(parent.id, parent.members);
      next.push_back({child1(parent.id), parent.id, std::move(a)});
      next.push_back({child2(parent.id), parent.id, std::move(b)});
    }
  }

  void rebuild_subtree(NodeId id) {
    std::vector<NodeId> frontier{id};
    while (!frontier.empty()) {
      std::vector<NodeId> next;
      for (NodeId n : frontier) {
        if (n.level >= depth()) continue;
        const PartitionNode& parent = node(n);
        auto [a, b] = split_members(parent.id, parent.members);
        levels_[static_cast<std::size_t>(n.level) + 1]
               [static_cast<std::size_t>(child1(n).number - 1)].members = std::move(a);
        levels_[static_cast<std::size_t>(n.level) + 1]
               [static_cast<std::size_t>(child2(n).number - 1)].members = std::move(b);
        next.push_back(child1(n));
        next.push_back(child2(n));
      }
      frontier = std::move(next);
    }
  }
};

// ---------------------------------------------------------------------------
// Bound selections
// ---------------------------------------------------------------------------

enum class SelectionKind { upper, lower };

/// A validated selection of partition nodes, consumed by the bound operators.
/// Upper: exactly one node (any depth, possibly empty). Lower: pairwise
/// disjoint nodes whose union covers the root set; empty placeholders allowed.
struct BoundSelection {
  SelectionKind kind;
  std::vector<std::vector<int>> member_sets;
  std::string descriptor;
};

inline BoundSelection make_upper_selection(const PartitionTree& tree, NodeId id) {
  BoundSelection sel;
  sel.kind = SelectionKind::upper;
  sel.member_sets.push_back(tree.node(id).members);
  sel.descriptor = "upper{" + to_string(id) + "}";
  return sel;
}

inline BoundSelection make_upper_selection(const PartitionTree& tree,
                                           std::span<const NodeId> ids) {
  if (ids.size() != 1)
    throw MultipleNodes("an upper selection is exactly one node, got " +
                        std::to_string(ids.size()));
  return make_upper_selection(tree, ids[0]);
}

/// Upper selection over the empty observation set: bounds by the prior entropy.
inline BoundSelection make_empty_upper_selection() {
  BoundSelection sel;
  sel.kind = SelectionKind::upper;
  sel.member_sets.emplace_back();
  sel.descriptor = "upper{empty}";
  return sel;
}

inline BoundSelection make_lower_selection(const PartitionTree& tree,
                                           std::span<const NodeId> ids) {
  BoundSelection sel;
  sel.kind = SelectionKind::lower;
  std::vector<int> merged;
  std::string desc = "lower{";
  bool first = true;
  for (NodeId id : ids) {
    const PartitionNode& n = tree.node(id);
    sel.member_sets.push_back(n.members);
    merged.insert(merged.end(), n.members.begin(), n.members.end());
    if (!first) desc += ",";
    desc += to_string(id);
    first = false;
  }
  desc += "}";

  std::sort(merged.begin(), merged.end());
  if (std::adjacent_find(merged.begin(), merged.end()) != merged.end())
    throw InvalidCover("lower selection nodes overlap");
  if (merged != tree.root_members())
    throw InvalidCover("lower selection does not cover the root member set");
  sel.descriptor = desc;
  return sel;
}

/// All nodes of one level: the canonical full-depth-d cover.
inline BoundSelection make_level_lower_selection(const PartitionTree& tree, int level) {
  const std::vector<NodeId> ids = tree.level_ids(level);
  return make_lower_selection(tree, ids);
}

}  // namespace mpplan
