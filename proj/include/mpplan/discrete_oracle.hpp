#pragma once

/**
 * Brute-force conditional-entropy evaluation on small finite joints
 * P(X, Z^1..Z^m). Validates the general-distribution bound theorems by
 * exhaustive enumeration; scale is capped (|X| <= 16, at most 12 components,
 * table <= 2^20 entries) so everything stays sub-second.
 *
 * Evaluation counters follow the measurement-model cost model: computing a
 * marginal H(Z^s) enumerates |X| * |Z^s| likelihood evaluations, the joint
 * H(Z) enumerates |X| * |Z|. How an individual evaluation is produced
 * internally (table lookup vs product of factors) is not counted.
 */

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mpplan/entropy_bounds.hpp"
#include "mpplan/errors.hpp"
#include "mpplan/partition_tree.hpp"

namespace mpplan {

namespace detail {

/// Kahan-compensated accumulator.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace detail

struct EvalCounts {
  std::uint64_t joint_evals = 0;
  std::uint64_t marginal_evals = 0;
};

class DiscreteJoint {
 public:
  DiscreteJoint(int x_card, std::vector<int> z_cards, std::vector<double> table)
      : x_card_(x_card), z_cards_(std::move(z_cards)), table_(std::move(table)) {
    if (x_card_ < 1 || x_card_ > 16)
      throw InvalidDistribution("|X| must be in [1, 16]");
    if (z_cards_.size() > 12)
      throw InvalidDistribution("at most 12 observation components");
    z_total_ = 1;
    for (int c : z_cards_) {
      if (c < 1) throw InvalidDistribution("component cardinality must be >= 1");
      z_total_ *= c;
    }
    if (static_cast<std::uint64_t>(x_card_) * static_cast<std::uint64_t>(z_total_) >
        (1ull << 20))
      throw InvalidDistribution("joint table too large");
    if (table_.size() != static_cast<std::size_t>(x_card_ * z_total_))
      throw InvalidDistribution("table size does not match |X| * prod |Z^i|");
    detail::KahanSum sum;
    for (double p : table_) {
      if (!(p >= 0.0)) throw InvalidDistribution("negative or NaN probability mass");
      sum.add(p);
    }
    if (std::abs(sum.value() - 1.0) > 1e-12)
      throw InvalidDistribution("probability masses sum to " + std::to_string(sum.value()));
  }

  /// Exactly conditionally-independent joint from P(X) and per-component
  /// conditionals P(Z^i | X) (each conditionals[i] is x_card rows by card_i).
  static DiscreteJoint from_factors(const std::vector<double>& px,
                                    const std::vector<std::vector<std::vector<double>>>& cond) {
    const int x_card = static_cast<int>(px.size());
    std::vector<int> cards;
    for (const auto& c : cond) {
      if (static_cast<int>(c.size()) != x_card)
        throw InvalidDistribution("conditional table rows must match |X|");
      cards.push_back(static_cast<int>(c[0].size()));
    }
    int z_total = 1;
    for (int c : cards) z_total *= c;
    std::vector<double> table(static_cast<std::size_t>(x_card * z_total));
    std::vector<int> digits(cards.size(), 0);
    for (int z = 0; z < z_total; ++z) {
      int rem = z;
      for (std::size_t i = cards.size(); i-- > 0;) {
        digits[i] = rem % cards[i];
        rem /= cards[i];
      }
      for (int x = 0; x < x_card; ++x) {
        double p = px[static_cast<std::size_t>(x)];
        for (std::size_t i = 0; i < cards.size(); ++i)
          p *= cond[i][static_cast<std::size_t>(x)][static_cast<std::size_t>(digits[i])];
        table[static_cast<std::size_t>(x * z_total + z)] = p;
      }
    }
    return DiscreteJoint(x_card, std::move(cards), std::move(table));
  }

  int x_card() const { return x_card_; }
  const std::vector<int>& z_cards() const { return z_cards_; }
  int z_total() const { return z_total_; }
  int component_count() const { return static_cast<int>(z_cards_.size()); }

  double mass(int x, int z_index) const {
    return table_[static_cast<std::size_t>(x * z_total_ + z_index)];
  }

  /// Cardinality of the subspace spanned by a component subset.
  int subset_total(std::span<const int> comps) const {
    int t = 1;
    for (int c : comps) t *= z_cards_[static_cast<std::size_t>(c)];
    return t;
  }

  /// Index of the subset tuple inside z_index (components in the given order).
  int subset_index(int z_index, std::span<const int> comps) const {
    int out = 0;
    for (int c : comps) {
      int rem = z_index;
      for (int i = component_count() - 1; i > c; --i)
        rem /= z_cards_[static_cast<std::size_t>(i)];
      out = out * z_cards_[static_cast<std::size_t>(c)] +
            rem % z_cards_[static_cast<std::size_t>(c)];
    }
    return out;
  }

 private:
  int x_card_;
  std::vector<int> z_cards_;
  std::vector<double> table_;
  int z_total_ = 1;
};

// ---------------------------------------------------------------------------
// Elementary entropies by enumeration
// ---------------------------------------------------------------------------

inline double marginal_x_entropy(const DiscreteJoint& j) {
  detail::KahanSum h;
  for (int x = 0; x < j.x_card(); ++x) {
    detail::KahanSum px;
    for (int z = 0; z < j.z_total(); ++z) px.add(j.mass(x, z));
    h.add(-detail::plogp(px.value()));
  }
  return h.value();
}

/// H(Z^s): marginal entropy of a component subset. Counts |X| * |Z^s|
/// model evaluations.
inline double subset_entropy_z(const DiscreteJoint& j, std::span<const int> comps,
                               EvalCounts* counts = nullptr) {
  const int total = j.subset_total(comps);
  std::vector<detail::KahanSum> marg(static_cast<std::size_t>(total));
  for (int x = 0; x < j.x_card(); ++x)
    for (int z = 0; z < j.z_total(); ++z)
      marg[static_cast<std::size_t>(j.subset_index(z, comps))].add(j.mass(x, z));
  detail::KahanSum h;
  for (const auto& m : marg) h.add(-detail::plogp(m.value()));
  if (counts)
    counts->marginal_evals +=
        static_cast<std::uint64_t>(j.x_card()) * static_cast<std::uint64_t>(total);
  return h.value();
}

/// H(Z^s | X).
inline double subset_entropy_z_given_x(const DiscreteJoint& j, std::span<const int> comps) {
  const int total = j.subset_total(comps);
  double h = 0.0;
  for (int x = 0; x < j.x_card(); ++x) {
    std::vector<detail::KahanSum> cond(static_cast<std::size_t>(total));
    detail::KahanSum px;
    for (int z = 0; z < j.z_total(); ++z) {
      cond[static_cast<std::size_t>(j.subset_index(z, comps))].add(j.mass(x, z));
      px.add(j.mass(x, z));
    }
    if (px.value() <= 0.0) continue;
    detail::KahanSum hx;
    for (const auto& m : cond) hx.add(-detail::plogp(m.value() / px.value()));
    h += px.value() * hx.value();
  }
  return h;
}

/// H(X | Z^s) by direct enumeration (posterior form, no independence needed).
inline double subset_cond_entropy_x_given_z(const DiscreteJoint& j,
                                            std::span<const int> comps) {
  const int total = j.subset_total(comps);
  std::vector<std::vector<detail::KahanSum>> table(
      static_cast<std::size_t>(total),
      std::vector<detail::KahanSum>(static_cast<std::size_t>(j.x_card())));
  for (int x = 0; x < j.x_card(); ++x)
    for (int z = 0; z < j.z_total(); ++z)
      table[static_cast<std::size_t>(j.subset_index(z, comps))][static_cast<std::size_t>(x)]
          .add(j.mass(x, z));
  detail::KahanSum h;
  for (const auto& row : table) {
    detail::KahanSum pz;
    for (const auto& m : row) pz.add(m.value());
    if (pz.value() <= 0.0) continue;
    for (const auto& m : row) {
      const double p = m.value();
      if (p > 0.0) h.add(-p * std::log(p / pz.value()));
    }
  }
  return h.value();
}

/// H(Z): joint entropy of all components. Counts |X| * |Z| model evaluations.
inline double joint_entropy_z(const DiscreteJoint& j, EvalCounts* counts = nullptr) {
  detail::KahanSum h;
  for (int z = 0; z < j.z_total(); ++z) {
    detail::KahanSum pz;
    for (int x = 0; x < j.x_card(); ++x) pz.add(j.mass(x, z));
    h.add(-detail::plogp(pz.value()));
  }
  if (counts)
    counts->joint_evals +=
        static_cast<std::uint64_t>(j.x_card()) * static_cast<std::uint64_t>(j.z_total());
  return h.value();
}

// ---------------------------------------------------------------------------
// Oracle operations
// ---------------------------------------------------------------------------

/// H(X | Z) by direct enumeration, with the factored identity
/// H(X|Z) = H(Z|X) + H(X) - H(Z) evaluated alongside as a self-check.
inline double cond_entropy_brute(const DiscreteJoint& j, EvalCounts* counts = nullptr) {
  std::vector<int> all(static_cast<std::size_t>(j.component_count()));
  std::iota(all.begin(), all.end(), 0);
  const double direct = subset_cond_entropy_x_given_z(j, all);
  const double factored =
      subset_entropy_z_given_x(j, all) + marginal_x_entropy(j) - joint_entropy_z(j, counts);
  if (std::abs(direct - factored) > 1e-12)
    throw InvalidDistribution("conditional-entropy factorization self-check failed: " +
                              std::to_string(direct) + " vs " + std::to_string(factored));
  return direct;
}

/// Check P(Z^{c_1},..,Z^{c_p} | X) = prod_i P(Z^{c_i} | X) over a cover.
inline bool conditionally_independent(const DiscreteJoint& j,
                                      std::span<const std::vector<int>> cover,
                                      double tol = 1e-10) {
  for (int x = 0; x < j.x_card(); ++x) {
    detail::KahanSum pxs;
    for (int z = 0; z < j.z_total(); ++z) pxs.add(j.mass(x, z));
    const double px = pxs.value();
    if (px <= 0.0) continue;

    // Per-cover-element conditionals for this x.
    std::vector<std::vector<double>> cond;
    for (const std::vector<int>& c : cover) {
      std::vector<detail::KahanSum> m(static_cast<std::size_t>(j.subset_total(c)));
      for (int z = 0; z < j.z_total(); ++z)
        m[static_cast<std::size_t>(j.subset_index(z, c))].add(j.mass(x, z));
      std::vector<double> v;
      v.reserve(m.size());
      for (const auto& s : m) v.push_back(s.value() / px);
      cond.push_back(std::move(v));
    }
    for (int z = 0; z < j.z_total(); ++z) {
      double prod = 1.0;
      for (std::size_t i = 0; i < cover.size(); ++i)
        prod *= cond[i][static_cast<std::size_t>(j.subset_index(z, cover[i]))];
      if (std::abs(j.mass(x, z) / px - prod) > tol) return false;
    }
  }
  return true;
}

/// Bounds on H(X|Z) in the observation-space form:
///   UB = H(Z^s | X) + H(X) - H(Z^s)              (any single node)
///   LB = sum_c [H(Z^c | X) - H(Z^c)] + H(X)      (disjoint cover)
/// The lower bound requires the cover elements to be conditionally
/// independent given X; that premise is checked, not assumed. The counter
/// accumulates the cover-marginal sums, the quantity the complexity analysis
/// compares against the joint-entropy enumeration.
inline BoundsInterval bounds_brute(const DiscreteJoint& j, const BoundSelection& upper_sel,
                                   const BoundSelection& lower_sel,
                                   EvalCounts* counts = nullptr) {
  if (upper_sel.kind != SelectionKind::upper || upper_sel.member_sets.size() != 1)
    throw MultipleNodes("bounds_brute needs an upper selection with one node");
  if (lower_sel.kind != SelectionKind::lower)
    throw InvalidCover("bounds_brute needs a lower selection");
  if (!conditionally_independent(j, lower_sel.member_sets))
    throw NotConditionallyIndependent(
        "cover elements are not conditionally independent given X");

  const double hx = marginal_x_entropy(j);
  const std::vector<int>& s = upper_sel.member_sets[0];
  const double ub = subset_entropy_z_given_x(j, s) + hx - subset_entropy_z(j, s, nullptr);

  double lb = 0.0;
  for (const std::vector<int>& c : lower_sel.member_sets)
    lb += subset_entropy_z_given_x(j, c) - subset_entropy_z(j, c, counts);
  lb += hx;
  return make_interval(lb, ub, lower_sel.descriptor + "+" + upper_sel.descriptor);
}

/// Exact evaluation counts of the joint-entropy sum versus the per-set
/// marginal sums, for asserting the multiplicative-vs-additive gap.
struct EnumerationCost {
  std::uint64_t joint_evals = 0;
  std::uint64_t partitioned_evals = 0;
};

inline EnumerationCost enumeration_cost(const DiscreteJoint& j, const BoundSelection& lower_sel) {
  if (lower_sel.kind != SelectionKind::lower)
    throw InvalidCover("enumeration_cost needs a lower selection");
  EnumerationCost cost;
  cost.joint_evals =
      static_cast<std::uint64_t>(j.x_card()) * static_cast<std::uint64_t>(j.z_total());
  for (const std::vector<int>& c : lower_sel.member_sets)
    cost.partitioned_evals += static_cast<std::uint64_t>(j.x_card()) *
                              static_cast<std::uint64_t>(j.subset_total(c));
  return cost;
}

}  // namespace mpplan
