#pragma once

/**
 * Information-form Gaussian beliefs.
 *
 * A belief is (Lambda, mu, index): a symmetric positive definite information
 * matrix over the joint state, a linearization point, and the variable layout
 * (planar poses of dimension 3, point landmarks of dimension 2).
 *
 * Entropy is H = (N ln(2 pi e) - logdet Lambda) / 2, in nats. Log-determinants
 * go through a Cholesky factorization; factorization failure is the positive
 * definiteness test, there is no eigenvalue thresholding.
 *
 * All types are immutable after construction. Operations return new values.
 */

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mpplan/errors.hpp"

namespace mpplan {

inline double log_two_pi_e() { return 1.0 + std::log(6.283185307179586476925287); }

// ---------------------------------------------------------------------------
// Variable indexing
// ---------------------------------------------------------------------------

enum class VarKind : std::uint8_t { pose, landmark };

inline int var_dim(VarKind kind) { return kind == VarKind::pose ? 3 : 2; }

struct VariableKey {
  VarKind kind;
  std::uint32_t num;

  friend auto operator<=>(const VariableKey&, const VariableKey&) = default;
};

inline VariableKey pose_key(std::uint32_t num) { return {VarKind::pose, num}; }
inline VariableKey landmark_key(std::uint32_t num) { return {VarKind::landmark, num}; }

inline std::string to_string(const VariableKey& k) {
  std::ostringstream os;
  os << (k.kind == VarKind::pose ? "x" : "l") << k.num;
  return os.str();
}

struct VariableIndex {
  VariableKey key;
  int dim;
  int offset;
};

/// Ordered variable layout; offsets partition [0, N) with no gaps.
class VariableIndexMap {
 public:
  VariableIndexMap() = default;

  explicit VariableIndexMap(std::vector<VariableKey> keys) {
    vars_.reserve(keys.size());
    int offset = 0;
    for (const VariableKey& k : keys) {
      if (by_key_.count(k))
        throw DuplicateVariable("duplicate variable " + to_string(k));
      by_key_[k] = static_cast<int>(vars_.size());
      vars_.push_back({k, var_dim(k.kind), offset});
      offset += var_dim(k.kind);
    }
    dim_ = offset;
  }

  int dim() const { return dim_; }
  std::size_t size() const { return vars_.size(); }
  const std::vector<VariableIndex>& vars() const { return vars_; }

  bool contains(const VariableKey& k) const { return by_key_.count(k) > 0; }

  const VariableIndex& at(const VariableKey& k) const {
    auto it = by_key_.find(k);
    if (it == by_key_.end()) throw UnknownVariable("unknown variable " + to_string(k));
    return vars_[static_cast<std::size_t>(it->second)];
  }

  VariableIndexMap appended(const VariableKey& k) const {
    VariableIndexMap out = *this;
    if (out.by_key_.count(k)) throw DuplicateVariable("duplicate variable " + to_string(k));
    out.by_key_[k] = static_cast<int>(out.vars_.size());
    out.vars_.push_back({k, var_dim(k.kind), out.dim_});
    out.dim_ += var_dim(k.kind);
    return out;
  }

  /// Highest-numbered pose, i.e. the current robot pose. Throws if none.
  const VariableIndex& last_pose() const {
    const VariableIndex* best = nullptr;
    for (const VariableIndex& v : vars_)
      if (v.key.kind == VarKind::pose && (!best || v.key.num > best->key.num)) best = &v;
    if (!best) throw UnknownVariable("belief contains no pose variable");
    return *best;
  }

 private:
  std::vector<VariableIndex> vars_;
  std::map<VariableKey, int> by_key_;
  int dim_ = 0;
};

// ---------------------------------------------------------------------------
// Information matrix
// ---------------------------------------------------------------------------

/// Dense symmetric matrix; symmetry enforced at construction.
class InfoMatrix {
 public:
  explicit InfoMatrix(Eigen::MatrixXd m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("information matrix must be square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
      throw DimensionMismatch("information matrix is not symmetric");
    mat_ = 0.5 * (m + m.transpose());
  }

  static InfoMatrix identity(int n) { return InfoMatrix(Eigen::MatrixXd::Identity(n, n)); }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXd& matrix() const { return mat_; }

 private:
  Eigen::MatrixXd mat_;
};

/// logdet via Cholesky. Throws NotPositiveDefinite on factorization failure.
inline double llt_logdet(const Eigen::MatrixXd& m, const char* what = "matrix") {
  if (m.rows() == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite(std::string(what) + ": Cholesky factorization failed");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Exact log-determinant of a symmetric PD matrix; the reference backend.
inline double logdet_exact(const InfoMatrix& info) {
  return llt_logdet(info.matrix(), "logdet_exact");
}

// ---------------------------------------------------------------------------
// Belief
// ---------------------------------------------------------------------------

class GaussianBelief {
 public:
  GaussianBelief(InfoMatrix info, Eigen::VectorXd mean, VariableIndexMap index)
      : info_(std::move(info)), mean_(std::move(mean)), index_(std::move(index)) {
    if (mean_.size() != info_.dim())
      throw DimensionMismatch("mean length does not match information matrix");
    if (index_.dim() != info_.dim())
      throw DimensionMismatch("variable index does not cover the state");
  }

  const InfoMatrix& info() const { return info_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const VariableIndexMap& index() const { return index_; }
  int dim() const { return info_.dim(); }

  Eigen::VectorXd mean_of(const VariableKey& k) const {
    const VariableIndex& v = index_.at(k);
    return mean_.segment(v.offset, v.dim);
  }

 private:
  InfoMatrix info_;
  Eigen::VectorXd mean_;
  VariableIndexMap index_;
};

/// Differential entropy in nats: (N ln(2 pi e) - logdet Lambda) / 2.
inline double entropy(const GaussianBelief& b) {
  return 0.5 * (b.dim() * log_two_pi_e() - logdet_exact(b.info()));
}

struct NewVariable {
  VariableKey key;
  Eigen::VectorXd mean;  // predicted value, length var_dim(key.kind)
};

/// Zero-extend the information matrix with new variables. The result is not
/// required to be positive definite until further factors are added.
inline GaussianBelief augment(const GaussianBelief& b, std::span<const NewVariable> vars) {
  if (vars.empty()) return b;
  int extra = 0;
  for (const NewVariable& v : vars) extra += var_dim(v.key.kind);

  const int n = b.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + extra, n + extra);
  m.topLeftCorner(n, n) = b.info().matrix();
  Eigen::VectorXd mean(n + extra);
  mean.head(n) = b.mean();

  VariableIndexMap index = b.index();
  int offset = n;
  for (const NewVariable& v : vars) {
    const int d = var_dim(v.key.kind);
    if (v.mean.size() != d)
      throw DimensionMismatch("predicted mean for " + to_string(v.key) + " has wrong length");
    index = index.appended(v.key);
    mean.segment(offset, d) = v.mean;
    offset += d;
  }
  return GaussianBelief(InfoMatrix(std::move(m)), std::move(mean), std::move(index));
}

// ---------------------------------------------------------------------------
// Planar motion
// ---------------------------------------------------------------------------

struct Pose2 {
  double x = 0.0, y = 0.0, theta = 0.0;
};

struct Action2 {
  double dx = 0.0, dy = 0.0, dtheta = 0.0;  // body-frame translation, heading change
};

inline double wrap_angle(double a) {
  a = std::fmod(a + 6.283185307179586476925287, 6.283185307179586476925287);
  if (a > 3.141592653589793238462643) a -= 6.283185307179586476925287;
  return a;
}

struct MotionSpec {
  std::function<Pose2(const Pose2&, const Action2&)> apply;
  std::function<Eigen::Matrix3d(const Pose2&, const Action2&)> jacobian_x;
  Eigen::Matrix3d process_noise;  // W, positive definite
};

/// x' = x + R(theta) * (dx, dy), theta' = theta + dtheta.
inline MotionSpec planar_odometry(const Eigen::Matrix3d& process_noise) {
  MotionSpec spec;
  spec.apply = [](const Pose2& p, const Action2& a) {
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    return Pose2{p.x + c * a.dx - s * a.dy, p.y + s * a.dx + c * a.dy,
                 wrap_angle(p.theta + a.dtheta)};
  };
  spec.jacobian_x = [](const Pose2& p, const Action2& a) {
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
    f(0, 2) = -s * a.dx - c * a.dy;
    f(1, 2) = c * a.dx - s * a.dy;
    return f;
  };
  spec.process_noise = process_noise;
  return spec;
}

/// Inverse square root of a small PD covariance: returns L^-1 with M = L L^T,
/// so that (L^-1 r) has identity covariance when r ~ N(0, M).
inline Eigen::MatrixXd whitener(const Eigen::MatrixXd& cov, const char* what = "noise") {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite(std::string(what) + " covariance is not positive definite");
  return llt.matrixL()
      .solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
}

namespace detail {

/// One whitened motion factor: rows  W^{-1/2} [ -F | I ]  over (prev, next).
struct MotionRows {
  Eigen::Matrix3d prev_block;  // -W^{-1/2} F
  Eigen::Matrix3d next_block;  //  W^{-1/2}
};

inline MotionRows motion_rows(const MotionSpec& motion, const Pose2& at, const Action2& a) {
  const Eigen::MatrixXd w = whitener(motion.process_noise, "process");
  MotionRows r;
  r.prev_block = -w * motion.jacobian_x(at, a);
  r.next_block = w;
  return r;
}

}  // namespace detail

/// Propagated belief Lambda^{Aug-}: one new pose per action, motion
/// information added per step, no measurements. Zero actions is a no-op.
inline GaussianBelief propagate(const GaussianBelief& b, std::span<const Action2> actions,
                                const MotionSpec& motion) {
  if (actions.empty()) return b;

  const int n0 = b.dim();
  const int n = n0 + 3 * static_cast<int>(actions.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  m.topLeftCorner(n0, n0) = b.info().matrix();
  Eigen::VectorXd mean(n);
  mean.head(n0) = b.mean();

  VariableIndexMap index = b.index();
  const VariableIndex& last = index.last_pose();
  int prev_offset = last.offset;
  std::uint32_t prev_num = last.key.num;
  Pose2 pose{b.mean()[prev_offset], b.mean()[prev_offset + 1], b.mean()[prev_offset + 2]};

  int offset = n0;
  for (const Action2& a : actions) {
    const detail::MotionRows rows = detail::motion_rows(motion, pose, a);
    Eigen::Matrix<double, 3, 6> j;
    j << rows.prev_block, rows.next_block;
    Eigen::Matrix<double, 6, 6> outer = j.transpose() * j;
    m.block<3, 3>(prev_offset, prev_offset) += outer.block<3, 3>(0, 0);
    m.block<3, 3>(prev_offset, offset) += outer.block<3, 3>(0, 3);
    m.block<3, 3>(offset, prev_offset) += outer.block<3, 3>(3, 0);
    m.block<3, 3>(offset, offset) += outer.block<3, 3>(3, 3);

    pose = motion.apply(pose, a);
    mean[offset] = pose.x;
    mean[offset + 1] = pose.y;
    mean[offset + 2] = pose.theta;
    index = index.appended(pose_key(prev_num + 1));
    prev_num += 1;
    prev_offset = offset;
    offset += 3;
  }

  GaussianBelief out(InfoMatrix(std::move(m)), std::move(mean), std::move(index));
  llt_logdet(out.info().matrix(), "propagate");  // PD check; throws otherwise
  return out;
}

// ---------------------------------------------------------------------------
// Covariance recovery
// ---------------------------------------------------------------------------

/// Marginal covariance entries for a set of variables, indexed by the global
/// state columns they occupy. Produced once per planning session and shared
/// read-only across candidate evaluations.
class CovarianceTable {
 public:
  CovarianceTable() = default;

  CovarianceTable(std::vector<std::pair<VariableKey, int>> vars, std::vector<int> cols,
                  Eigen::MatrixXd block)
      : vars_(std::move(vars)), cols_(std::move(cols)), block_(std::move(block)) {
    for (std::size_t i = 0; i < cols_.size(); ++i) col_map_[cols_[i]] = static_cast<int>(i);
  }

  /// Test/benchmark constructor from an explicit dense covariance restriction.
  static CovarianceTable from_dense(const Eigen::MatrixXd& block, std::vector<int> cols) {
    return CovarianceTable({}, std::move(cols), block);
  }

  bool empty() const { return cols_.empty(); }
  const std::vector<std::pair<VariableKey, int>>& vars() const { return vars_; }
  const std::vector<int>& cols() const { return cols_; }
  const Eigen::MatrixXd& block() const { return block_; }

  bool has_col(int global_col) const { return col_map_.count(global_col) > 0; }

  /// Covariance sub-block for the given global columns (all must be present).
  Eigen::MatrixXd sub(std::span<const int> global_cols) const {
    std::vector<int> local(global_cols.size());
    for (std::size_t i = 0; i < global_cols.size(); ++i) {
      auto it = col_map_.find(global_cols[i]);
      if (it == col_map_.end())
        throw MissingCovarianceEntries("covariance entry for column " +
                                       std::to_string(global_cols[i]) + " not recovered");
      local[i] = it->second;
    }
    Eigen::MatrixXd out(global_cols.size(), global_cols.size());
    for (std::size_t i = 0; i < local.size(); ++i)
      for (std::size_t j = 0; j < local.size(); ++j)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            block_(local[i], local[j]);
    return out;
  }

 private:
  std::vector<std::pair<VariableKey, int>> vars_;
  std::vector<int> cols_;
  Eigen::MatrixXd block_;
  std::unordered_map<int, int> col_map_;
};

/// Solve Lambda X = E for the unit columns of the requested variables; the
/// selected rows of X are the exact marginal covariance sub-matrix.
inline CovarianceTable recover_covariance_entries(const GaussianBelief& b,
                                                  std::span<const VariableKey> vars) {
  if (vars.empty()) return CovarianceTable({}, {}, Eigen::MatrixXd(0, 0));

  std::vector<std::pair<VariableKey, int>> entries;
  std::vector<int> cols;
  for (const VariableKey& k : vars) {
    const VariableIndex& v = b.index().at(k);
    entries.emplace_back(k, v.dim);
    for (int c = 0; c < v.dim; ++c) cols.push_back(v.offset + c);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(b.info().matrix());
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("recover_covariance_entries: belief is not positive definite");

  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(b.dim(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) e(cols[i], static_cast<Eigen::Index>(i)) = 1.0;
  const Eigen::MatrixXd x = llt.solve(e);

  Eigen::MatrixXd block(cols.size(), cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i)
    block.row(static_cast<Eigen::Index>(i)) = x.row(cols[i]);
  block = 0.5 * (block + block.transpose());
  return CovarianceTable(std::move(entries), std::move(cols), std::move(block));
}

}  // namespace mpplan
