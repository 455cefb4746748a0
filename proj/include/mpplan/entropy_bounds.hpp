#pragma once

/**
 * Conditional-entropy bounds from observation-space partitioning.
 *
 * Everything here evaluates entropies of the form
 *
 *   H(X | Z^s) = (N ln(2 pi e) - logdet(Lambda^{Aug-} + (A^s)^T A^s)) / 2
 *
 * where Lambda^{Aug-} is the propagated (motion-included) conditioning prior
 * and A^s are the whitened measurement rows of the selected components. Under
 * maximum-likelihood observations the Jacobian depends only on the data
 * association, so these are exact expected entropies, not per-sample values.
 *
 * The two-set lower bound is g(Z^s, Z^sbar) = H(X|Z^s) + H(X|Z^sbar) - H(X);
 * a p-set cover generalizes to sum_i H(X|Z^{c_i}) - (p-1) H(X). An upper
 * bound is H(X|Z^s) for any single node of the partition tree. Both sandwich
 * the exact conditional entropy for every valid selection.
 *
 * Determinants come from one of two backends:
 *   - dense: assemble the posterior and factorize (the exact reference);
 *   - ramdl: the augmented matrix determinant lemma over pre-recovered prior
 *     covariance entries, whose per-evaluation cost is cubic in the number of
 *     stacked rows instead of the state dimension.
 *
 * All operations are pure; evaluations for different candidates can run
 * concurrently on shared read-only inputs.
 */

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mpplan/collective_jacobian.hpp"
#include "mpplan/errors.hpp"
#include "mpplan/gaussian_belief.hpp"
#include "mpplan/partition_tree.hpp"

namespace mpplan {

struct BoundsInterval {
  double lb = 0.0;
  double ub = 0.0;
  std::string selection;
};

inline BoundsInterval make_interval(double lb, double ub, std::string selection) {
  if (!(lb <= ub + 1e-9))
    throw Error("bounds interval violated: lb " + std::to_string(lb) + " > ub " +
                std::to_string(ub));
  return {lb, ub, std::move(selection)};
}

enum class Backend { dense, ramdl };

inline const char* to_string(Backend b) { return b == Backend::dense ? "dense" : "ramdl"; }

// ---------------------------------------------------------------------------
// rAMDL log-determinant
// ---------------------------------------------------------------------------

/// log|Lambda^{Aug} + A^T A| via the augmented matrix determinant lemma:
///
///   |Lambda + A^T A| = |Lambda| * |Delta| * |A_new^T Delta^-1 A_new|,
///   Delta = I_r + A_old Sigma A_old^T,
///
/// with Sigma the prior covariance restricted to the old columns that A
/// actually touches. When there are no new columns the last factor is
/// omitted (plain matrix determinant lemma). A rank-deficient A_new means
/// the stack is missing motion or initialization rows and is an error.
inline double ramdl_logdet(double prior_logdet, const CovarianceTable& cov,
                           const CollectiveJacobian& a) {
  const int r = a.row_count();

  // Old columns with any nonzero entry; only these need covariance entries.
  std::vector<int> involved_global;
  if (r > 0) {
    for (int col : a.old_cols)
      if (a.rows.col(col).cwiseAbs().maxCoeff() > 0.0) involved_global.push_back(col);
  }

  Eigen::MatrixXd delta = Eigen::MatrixXd::Identity(r, r);
  if (!involved_global.empty()) {
    Eigen::MatrixXd a_inv(r, static_cast<Eigen::Index>(involved_global.size()));
    for (std::size_t i = 0; i < involved_global.size(); ++i)
      a_inv.col(static_cast<Eigen::Index>(i)) = a.rows.col(involved_global[i]);
    const Eigen::MatrixXd sigma = cov.sub(involved_global);
    delta.noalias() += a_inv * sigma * a_inv.transpose();
  }

  Eigen::LLT<Eigen::MatrixXd> llt_delta(delta);
  if (llt_delta.info() != Eigen::Success)
    throw NotPositiveDefinite("ramdl_logdet: Delta factorization failed");
  const double logdet_delta =
      r == 0 ? 0.0 : 2.0 * llt_delta.matrixLLT().diagonal().array().log().sum();

  if (a.new_cols.empty()) return prior_logdet + logdet_delta;

  Eigen::MatrixXd a_new(r, static_cast<Eigen::Index>(a.new_cols.size()));
  for (std::size_t i = 0; i < a.new_cols.size(); ++i)
    a_new.col(static_cast<Eigen::Index>(i)) = a.rows.col(a.new_cols[i]);

  if (r < static_cast<int>(a.new_cols.size()))
    throw RankDeficientNew("ramdl_logdet: fewer rows than new columns");
  const Eigen::MatrixXd x = llt_delta.solve(a_new);
  Eigen::MatrixXd gram = a_new.transpose() * x;
  gram = 0.5 * (gram + gram.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt_gram(gram);
  if (llt_gram.info() != Eigen::Success)
    throw RankDeficientNew(
        "ramdl_logdet: A_new is rank deficient (missing motion or initialization rows?)");
  const double logdet_gram = 2.0 * llt_gram.matrixLLT().diagonal().array().log().sum();
  return prior_logdet + logdet_delta + logdet_gram;
}

/// Inputs the ramdl backend needs besides the propagated belief: the
/// planning-time prior log-determinant, its recovered covariance entries, and
/// the shared (motion + landmark initialization) rows with
/// prop.info == Lambda_prior^{Aug} + shared^T shared.
struct RamdlInputs {
  double prior_logdet = 0.0;
  const CovarianceTable* cov = nullptr;
  const CollectiveJacobian* shared_rows = nullptr;
};

// ---------------------------------------------------------------------------
// Posterior log-determinants per component subset
// ---------------------------------------------------------------------------

namespace detail {

inline double posterior_logdet_dense(const GaussianBelief& prop, const CollectiveJacobian& a,
                                     std::span<const int> components) {
  Eigen::MatrixXd m = prop.info().matrix();
  if (!components.empty()) {
    const CollectiveJacobian sub = a.rows_for(components);
    if (sub.row_count() > 0) m.noalias() += sub.rows.transpose() * sub.rows;
  }
  return llt_logdet(m, "posterior");
}

inline double posterior_logdet_ramdl(const CollectiveJacobian& a,
                                     std::span<const int> components,
                                     const RamdlInputs& inputs) {
  if (inputs.cov == nullptr || inputs.shared_rows == nullptr)
    throw MissingCovarianceEntries("ramdl backend requires covariance entries and shared rows");
  const CollectiveJacobian& shared = *inputs.shared_rows;

  // Stack [shared; selected measurement rows] in one pass.
  std::vector<char> pick(static_cast<std::size_t>(a.num_components), 0);
  for (int c : components) {
    if (c < 0 || c >= a.num_components)
      throw DimensionMismatch("component index " + std::to_string(c) + " out of range");
    pick[static_cast<std::size_t>(c)] = 1;
  }
  std::vector<int> keep;
  for (int r = 0; r < a.row_count(); ++r)
    if (pick[static_cast<std::size_t>(a.row_component[static_cast<std::size_t>(r)])])
      keep.push_back(r);

  CollectiveJacobian stacked;
  stacked.rows.resize(shared.row_count() + static_cast<Eigen::Index>(keep.size()),
                      a.col_count());
  stacked.rows.topRows(shared.row_count()) = shared.rows;
  for (std::size_t i = 0; i < keep.size(); ++i)
    stacked.rows.row(shared.row_count() + static_cast<Eigen::Index>(i)) = a.rows.row(keep[i]);
  stacked.row_component.assign(static_cast<std::size_t>(stacked.rows.rows()), 0);
  stacked.num_components = stacked.rows.rows() > 0 ? 1 : 0;
  stacked.old_cols = a.old_cols;
  stacked.new_cols = a.new_cols;
  return ramdl_logdet(inputs.prior_logdet, *inputs.cov, stacked);
}

inline double posterior_logdet(const GaussianBelief& prop, const CollectiveJacobian& a,
                               std::span<const int> components, Backend backend,
                               const RamdlInputs* ramdl) {
  if (backend == Backend::ramdl) {
    if (ramdl == nullptr)
      throw MissingCovarianceEntries("ramdl backend selected without its inputs");
    return posterior_logdet_ramdl(a, components, *ramdl);
  }
  return posterior_logdet_dense(prop, a, components);
}

inline double cond_entropy_from_logdet(int n, double logdet) {
  return 0.5 * (n * log_two_pi_e() - logdet);
}

inline void check_dims(const GaussianBelief& prop, const CollectiveJacobian& a) {
  if (a.col_count() != prop.dim())
    throw DimensionMismatch("collective Jacobian has " + std::to_string(a.col_count()) +
                            " columns, state has " + std::to_string(prop.dim()));
}

}  // namespace detail

/// H(X | Z^s) for an arbitrary component subset.
inline double conditional_entropy_for(const GaussianBelief& prop, const CollectiveJacobian& a,
                                      std::span<const int> components,
                                      Backend backend = Backend::dense,
                                      const RamdlInputs* ramdl = nullptr) {
  detail::check_dims(prop, a);
  return detail::cond_entropy_from_logdet(
      prop.dim(), detail::posterior_logdet(prop, a, components, backend, ramdl));
}

/// Exact expected entropy under ML observations: all measurement rows in.
inline double conditional_entropy_exact(const GaussianBelief& prop, const CollectiveJacobian& a,
                                        Backend backend = Backend::dense,
                                        const RamdlInputs* ramdl = nullptr) {
  detail::check_dims(prop, a);
  std::vector<int> all(static_cast<std::size_t>(a.num_components));
  for (int i = 0; i < a.num_components; ++i) all[static_cast<std::size_t>(i)] = i;
  return conditional_entropy_for(prop, a, all, backend, ramdl);
}

// ---------------------------------------------------------------------------
// g-operator and bounds
// ---------------------------------------------------------------------------

/// g(Z^s, Z^sbar) = H(X|Z^s) + H(X|Z^sbar) - H(X), with the degenerate cases
/// g(Z, empty) = g(empty, Z) = H(X|Z) - H(X) and g(empty, empty) = -H(X).
/// The two-set value is itself the lower bound on H(X|Z); callers add H(X)
/// where a bound form requires it.
inline double g_operator(const GaussianBelief& prop, const CollectiveJacobian& a,
                         std::span<const int> s, std::span<const int> s_bar,
                         Backend backend = Backend::dense, const RamdlInputs* ramdl = nullptr) {
  detail::check_dims(prop, a);
  for (int i : s)
    for (int j : s_bar)
      if (i == j) throw OverlappingSets("g-operator sets share component " + std::to_string(i));

  const int n = prop.dim();
  const double h_prior = detail::cond_entropy_from_logdet(
      n, detail::posterior_logdet(prop, a, {}, backend, ramdl));
  if (s.empty() && s_bar.empty()) return -h_prior;
  if (s.empty() || s_bar.empty()) {
    const auto& only = s.empty() ? s_bar : s;
    return conditional_entropy_for(prop, a, only, backend, ramdl) - h_prior;
  }
  return conditional_entropy_for(prop, a, s, backend, ramdl) +
         conditional_entropy_for(prop, a, s_bar, backend, ramdl) - h_prior;
}

/// Upper bound: H(X | Z^s) for the single selected node. The empty node
/// gives the prior entropy, the loosest bound.
inline double upper_bound(const GaussianBelief& prop, const CollectiveJacobian& a,
                          const BoundSelection& sel, Backend backend = Backend::dense,
                          const RamdlInputs* ramdl = nullptr) {
  if (sel.kind != SelectionKind::upper || sel.member_sets.size() != 1)
    throw MultipleNodes("upper bound needs an upper selection with one node");
  return conditional_entropy_for(prop, a, sel.member_sets[0], backend, ramdl);
}

/// Lower bound for a disjoint cover {c_1..c_p} of the components:
/// sum_i H(X|Z^{c_i}) - (p-1) H(X). For p = 2 this is the posterior-form
/// two-set bound; mixed-depth covers are the hierarchy generalization.
inline double lower_bound(const GaussianBelief& prop, const CollectiveJacobian& a,
                          const BoundSelection& sel, Backend backend = Backend::dense,
                          const RamdlInputs* ramdl = nullptr) {
  if (sel.kind != SelectionKind::lower)
    throw InvalidCover("lower bound needs a lower selection");
  detail::check_dims(prop, a);
  const int n = prop.dim();
  const double h_prior = detail::cond_entropy_from_logdet(
      n, detail::posterior_logdet(prop, a, {}, backend, ramdl));
  double sum = 0.0;
  for (const std::vector<int>& c : sel.member_sets)
    sum += conditional_entropy_for(prop, a, c, backend, ramdl);
  return sum - (static_cast<double>(sel.member_sets.size()) - 1.0) * h_prior;
}

/// Lower and upper bound for one candidate, with the chosen backend.
inline BoundsInterval partitioned_bounds(const GaussianBelief& prop, const CollectiveJacobian& a,
                                         const BoundSelection& upper_sel,
                                         const BoundSelection& lower_sel,
                                         Backend backend = Backend::dense,
                                         const RamdlInputs* ramdl = nullptr) {
  const double ub = upper_bound(prop, a, upper_sel, backend, ramdl);
  const double lb = lower_bound(prop, a, lower_sel, backend, ramdl);
  return make_interval(lb, ub, lower_sel.descriptor + "+" + upper_sel.descriptor);
}

// ---------------------------------------------------------------------------
// Involved-state form
// ---------------------------------------------------------------------------

/// Which state columns each measurement component is allowed to touch, as
/// dictated by the data association vector beta.
struct AssociationInfo {
  std::vector<std::vector<int>> component_cols;
};

/// Bounds in the involved-state form H(Z^s | X^{inv_s}). In the Gaussian
/// realization the measurement rows already touch only the involved states,
/// so after validating that structure this is numerically identical to
/// partitioned_bounds with the same backend.
inline BoundsInterval involved_state_bounds(const GaussianBelief& prop,
                                            const CollectiveJacobian& a,
                                            const AssociationInfo& beta,
                                            const BoundSelection& upper_sel,
                                            const BoundSelection& lower_sel,
                                            Backend backend = Backend::dense,
                                            const RamdlInputs* ramdl = nullptr) {
  if (static_cast<int>(beta.component_cols.size()) != a.num_components)
    throw InconsistentAssociation("association covers " +
                                  std::to_string(beta.component_cols.size()) +
                                  " components, Jacobian has " +
                                  std::to_string(a.num_components));
  for (int r = 0; r < a.row_count(); ++r) {
    const auto& allowed = beta.component_cols[static_cast<std::size_t>(
        a.row_component[static_cast<std::size_t>(r)])];
    for (int c = 0; c < a.col_count(); ++c) {
      if (a.rows(r, c) != 0.0 &&
          !std::binary_search(allowed.begin(), allowed.end(), c))
        throw InconsistentAssociation("row " + std::to_string(r) +
                                      " touches column " + std::to_string(c) +
                                      " outside its involved states");
    }
  }
  return partitioned_bounds(prop, a, upper_sel, lower_sel, backend, ramdl);
}

}  // namespace mpplan
