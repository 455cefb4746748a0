#pragma once

/**
 * Stacked, pre-whitened measurement-factor rows over the augmented state.
 *
 * Rows are whitened by V^{-1/2} at assembly, so A^T A directly carries
 * H^T V^{-1} H and the posterior information is Lambda^{Aug-} + A^T A.
 * Each row belongs to exactly one measurement component (the unit that
 * partition trees distribute, e.g. one (step, landmark) sighting); columns
 * are split between planning-time states (old) and states added by the
 * candidate action sequence (new).
 */

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mpplan/errors.hpp"

namespace mpplan {

struct CollectiveJacobian {
  Eigen::MatrixXd rows;           // r x N, whitened
  std::vector<int> row_component; // size r; component index per row
  int num_components = 0;
  std::vector<int> old_cols;      // global column indices of planning-time states
  std::vector<int> new_cols;      // global column indices of horizon-added states

  int row_count() const { return static_cast<int>(rows.rows()); }
  int col_count() const { return static_cast<int>(rows.cols()); }

  void validate() const {
    if (static_cast<int>(row_component.size()) != row_count())
      throw DimensionMismatch("row_component size does not match row count");
    for (int c : row_component)
      if (c < 0 || c >= num_components)
        throw DimensionMismatch("row component index out of range");
    std::vector<int> all = old_cols;
    all.insert(all.end(), new_cols.begin(), new_cols.end());
    std::sort(all.begin(), all.end());
    for (int i = 0; i < col_count(); ++i)
      if (i >= static_cast<int>(all.size()) || all[static_cast<std::size_t>(i)] != i)
        throw DimensionMismatch("old/new column split does not partition the columns");
  }

  /// Jacobian restricted to the rows of the given components. Column structure
  /// is preserved, so the result addresses the same augmented state.
  CollectiveJacobian rows_for(std::span<const int> components) const {
    std::vector<char> pick(static_cast<std::size_t>(num_components), 0);
    for (int c : components) {
      if (c < 0 || c >= num_components)
        throw DimensionMismatch("component index " + std::to_string(c) + " out of range");
      pick[static_cast<std::size_t>(c)] = 1;
    }
    std::vector<int> keep;
    for (int r = 0; r < row_count(); ++r)
      if (pick[static_cast<std::size_t>(row_component[static_cast<std::size_t>(r)])]) keep.push_back(r);

    CollectiveJacobian out;
    out.rows.resize(static_cast<Eigen::Index>(keep.size()), rows.cols());
    out.row_component.reserve(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      out.rows.row(static_cast<Eigen::Index>(i)) = rows.row(keep[i]);
      out.row_component.push_back(row_component[static_cast<std::size_t>(keep[i])]);
    }
    out.num_components = num_components;
    out.old_cols = old_cols;
    out.new_cols = new_cols;
    return out;
  }

  static CollectiveJacobian vstack(const CollectiveJacobian& a, const CollectiveJacobian& b) {
    if (a.col_count() != b.col_count())
      throw DimensionMismatch("vstack: column counts differ");
    CollectiveJacobian out;
    out.rows.resize(a.rows.rows() + b.rows.rows(), a.rows.cols());
    out.rows.topRows(a.rows.rows()) = a.rows;
    out.rows.bottomRows(b.rows.rows()) = b.rows;
    out.row_component = a.row_component;
    out.row_component.insert(out.row_component.end(), b.row_component.begin(),
                             b.row_component.end());
    out.num_components = std::max(a.num_components, b.num_components);
    out.old_cols = a.old_cols;
    out.new_cols = a.new_cols;
    return out;
  }
};

}  // namespace mpplan
