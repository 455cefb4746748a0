#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include "mpplan/partition_tree.hpp"

using namespace mpplan;

namespace {

std::vector<int> sorted_union(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out = a;
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  return out;
}

void check_partition_invariant(const PartitionTree& t) {
  for (int level = 0; level < t.depth(); ++level) {
    for (NodeId id : t.level_ids(level)) {
      const PartitionNode& parent = t.node(id);
      const PartitionNode& c1 = t.node(PartitionTree::child1(id));
      const PartitionNode& c2 = t.node(PartitionTree::child2(id));
      REQUIRE(sorted_union(c1.members, c2.members) == parent.members);
      std::set<int> overlap(c1.members.begin(), c1.members.end());
      for (int m : c2.members) REQUIRE(!overlap.count(m));
    }
  }
}

}  // namespace

TEST_CASE("full-depth tree over eight members has singleton leaves") {
  for (SplitStrategy s :
       {SplitStrategy::contiguous, SplitStrategy::interleaved, SplitStrategy::seeded_random}) {
    const PartitionTree t = PartitionTree::build(8, 3, s, 42);
    REQUIRE(t.node({0, 1}).members.size() == 8);
    for (NodeId id : t.level_ids(3)) REQUIRE(t.node(id).members.size() == 1);
    check_partition_invariant(t);
  }
}

TEST_CASE("single member, depth zero") {
  const PartitionTree t = PartitionTree::build(1, 0, SplitStrategy::contiguous);
  REQUIRE(t.depth() == 0);
  REQUIRE(t.node({0, 1}).members == std::vector<int>{0});
}

TEST_CASE("contiguous split of seven members") {
  const PartitionTree t = PartitionTree::build(7, 1, SplitStrategy::contiguous);
  REQUIRE(t.node({1, 1}).members == std::vector<int>{0, 1, 2, 3});
  REQUIRE(t.node({1, 2}).members == std::vector<int>{4, 5, 6});
}

TEST_CASE("sibling sizes differ by at most one") {
  for (int m : {2, 3, 5, 9, 17, 33}) {
    const PartitionTree t =
        PartitionTree::build(m, PartitionTree::max_depth(m), SplitStrategy::seeded_random, 5);
    for (int level = 0; level < t.depth(); ++level)
      for (NodeId id : t.level_ids(level)) {
        const auto& a = t.node(PartitionTree::child1(id)).members;
        const auto& b = t.node(PartitionTree::child2(id)).members;
        REQUIRE(static_cast<int>(a.size()) - static_cast<int>(b.size()) >= 0);
        REQUIRE(static_cast<int>(a.size()) - static_cast<int>(b.size()) <= 1);
      }
  }
}

TEST_CASE("depth beyond ceil(log2(m)) is rejected") {
  REQUIRE_THROWS_AS(PartitionTree::build(8, 4, SplitStrategy::contiguous), DepthTooLarge);
  REQUIRE_THROWS_AS(PartitionTree::build(1, 1, SplitStrategy::contiguous), DepthTooLarge);
  REQUIRE_NOTHROW(PartitionTree::build(7, 3, SplitStrategy::contiguous));
}

TEST_CASE("building is deterministic and nested across depths") {
  const PartitionTree a = PartitionTree::build(12, 2, SplitStrategy::seeded_random, 99);
  const PartitionTree b = PartitionTree::build(12, 2, SplitStrategy::seeded_random, 99);
  for (int level = 0; level <= 2; ++level)
    for (NodeId id : a.level_ids(level))
      REQUIRE(a.node(id).members == b.node(id).members);

  const PartitionTree deeper = PartitionTree::build(12, 4, SplitStrategy::seeded_random, 99);
  for (int level = 0; level <= 2; ++level)
    for (NodeId id : a.level_ids(level))
      REQUIRE(a.node(id).members == deeper.node(id).members);
}

TEST_CASE("moving no members is the identity") {
  const PartitionTree t = PartitionTree::build(10, 2, SplitStrategy::seeded_random, 3);
  const PartitionTree moved = t.move_members({1, 1}, {1, 2}, {});
  for (int level = 0; level <= 2; ++level)
    for (NodeId id : t.level_ids(level))
      REQUIRE(t.node(id).members == moved.node(id).members);
}

TEST_CASE("moving everything empties the source sibling") {
  const PartitionTree t = PartitionTree::build(10, 2, SplitStrategy::seeded_random, 3);
  const std::vector<int> all = t.node({1, 1}).members;
  const PartitionTree moved = t.move_members({1, 1}, {1, 2}, all);
  REQUIRE(moved.node({1, 1}).members.empty());
  REQUIRE(moved.node({1, 2}).members == moved.node({0, 1}).members);
  check_partition_invariant(moved);
}

TEST_CASE("repeated single moves sweep the membership sizes") {
  PartitionTree t = PartitionTree::build(6, 1, SplitStrategy::contiguous);
  t = t.move_members({1, 1}, {1, 2}, t.node({1, 1}).members);
  for (int expected = 0; expected <= 6; ++expected) {
    REQUIRE(static_cast<int>(t.node({1, 1}).members.size()) == expected);
    REQUIRE(t.node({1, 2}).members.size() == 6 - static_cast<std::size_t>(expected));
    check_partition_invariant(t);
    if (expected < 6) {
      const int idx = t.node({1, 2}).members.front();
      t = t.move_members({1, 2}, {1, 1}, std::vector<int>{idx});
    }
  }
}

TEST_CASE("move_members preserves the root multiset and validates inputs") {
  const PartitionTree t = PartitionTree::build(9, 2, SplitStrategy::interleaved);
  const PartitionTree moved =
      t.move_members({2, 1}, {2, 2}, std::vector<int>{t.node({2, 1}).members.front()});
  REQUIRE(moved.node({0, 1}).members == t.node({0, 1}).members);

  REQUIRE_THROWS_AS(t.move_members({1, 1}, {2, 1}, {}), NotSiblings);
  REQUIRE_THROWS_AS(t.move_members({2, 1}, {2, 3}, {}), NotSiblings);
  REQUIRE_THROWS_AS(t.move_members({1, 1}, {1, 2}, std::vector<int>{999}), NotMembers);
}

TEST_CASE("lower selections must cover the root disjointly") {
  const PartitionTree t = PartitionTree::build(8, 2, SplitStrategy::contiguous);

  REQUIRE_NOTHROW(make_lower_selection(t, std::vector<NodeId>{{1, 1}, {1, 2}}));
  // Mixed depth: both children of Z^s plus the complement itself.
  REQUIRE_NOTHROW(make_lower_selection(t, std::vector<NodeId>{{2, 1}, {2, 2}, {1, 2}}));
  // Missing part of the root set.
  REQUIRE_THROWS_AS(make_lower_selection(t, std::vector<NodeId>{{1, 1}}), InvalidCover);
  // Overlapping nodes.
  REQUIRE_THROWS_AS(make_lower_selection(t, std::vector<NodeId>{{1, 1}, {2, 1}, {1, 2}}),
                    InvalidCover);
}

TEST_CASE("upper selections are exactly one node") {
  const PartitionTree t = PartitionTree::build(8, 3, SplitStrategy::contiguous);
  const BoundSelection u = make_upper_selection(t, {3, 5});
  REQUIRE(u.member_sets.size() == 1);
  REQUIRE(u.member_sets[0].size() == 1);
  const std::vector<NodeId> two{{1, 1}, {1, 2}};
  REQUIRE_THROWS_AS(make_upper_selection(t, two), MultipleNodes);
  REQUIRE(make_empty_upper_selection().member_sets[0].empty());
}
