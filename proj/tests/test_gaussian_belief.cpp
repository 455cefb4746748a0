#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mpplan/gaussian_belief.hpp"
#include "support/oracles.hpp"

using namespace mpplan;
using Catch::Matchers::WithinAbs;

namespace {

GaussianBelief identity_belief(int dim) {
  return GaussianBelief(InfoMatrix::identity(dim), Eigen::VectorXd::Zero(dim),
                        VariableIndexMap(oracle::keys_for_dim(dim)));
}

}  // namespace

TEST_CASE("entropy of identity information") {
  REQUIRE_THAT(entropy(identity_belief(2)), WithinAbs(std::log(2.0 * M_PI * std::exp(1.0)),
                                                      1e-12));
  REQUIRE_THAT(entropy(identity_belief(2)), WithinAbs(2.837877, 1e-6));
}

TEST_CASE("entropy of a scalar with sigma^2 = 1/4") {
  // Entropy is additive over independent blocks, so the 1-dof case with
  // information 4 falls out of diag(4, 1) minus a unit-information dof.
  Eigen::MatrixXd m(2, 2);
  m << 4.0, 0.0, 0.0, 1.0;
  GaussianBelief b(InfoMatrix(m), Eigen::VectorXd::Zero(2),
                   VariableIndexMap({landmark_key(0)}));
  const double h_unit = 0.5 * log_two_pi_e();
  REQUIRE_THAT(entropy(b) - h_unit, WithinAbs(0.5 * (log_two_pi_e() - std::log(4.0)), 1e-12));
  REQUIRE_THAT(entropy(b) - h_unit, WithinAbs(0.725791, 1e-6));
}

TEST_CASE("entropy matches the LU determinant oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    GaussianBelief b = oracle::random_belief(rng, 10);
    const double expected =
        0.5 * (10 * log_two_pi_e() - oracle::lu_logdet(b.info().matrix()));
    REQUIRE(oracle::rel_diff(entropy(b), expected) < 1e-10);
  }
}

TEST_CASE("entropy is invariant under variable permutation") {
  Rng rng(11);
  GaussianBelief b = oracle::random_belief(rng, 13);
  // Reverse the variable order.
  std::vector<VariableKey> keys;
  for (auto it = b.index().vars().rbegin(); it != b.index().vars().rend(); ++it)
    keys.push_back(it->key);
  VariableIndexMap perm(keys);
  Eigen::MatrixXd m(b.dim(), b.dim());
  Eigen::VectorXd mean(b.dim());
  for (const VariableIndex& v : perm.vars()) {
    const VariableIndex& src = b.index().at(v.key);
    mean.segment(v.offset, v.dim) = b.mean().segment(src.offset, src.dim);
    for (const VariableIndex& w : perm.vars()) {
      const VariableIndex& src_w = b.index().at(w.key);
      m.block(v.offset, w.offset, v.dim, w.dim) =
          b.info().matrix().block(src.offset, src_w.offset, src.dim, src_w.dim);
    }
  }
  GaussianBelief permuted(InfoMatrix(m), mean, perm);
  REQUIRE_THAT(entropy(permuted), WithinAbs(entropy(b), 1e-10));
}

TEST_CASE("added information never increases entropy") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    GaussianBelief b = oracle::random_belief(rng, 9);
    const Eigen::MatrixXd g = oracle::randn(rng, 4, 9);
    GaussianBelief tighter(InfoMatrix(b.info().matrix() + g.transpose() * g), b.mean(),
                           b.index());
    REQUIRE(entropy(tighter) <= entropy(b) + 1e-12);
  }
}

TEST_CASE("augment zero-extends the information matrix") {
  GaussianBelief b = identity_belief(2);
  std::vector<NewVariable> vars{{landmark_key(10), Eigen::Vector2d(3.0, 4.0)}};
  GaussianBelief a = augment(b, vars);
  REQUIRE(a.dim() == 4);
  REQUIRE(a.info().matrix().topLeftCorner(2, 2).isApprox(Eigen::Matrix2d::Identity()));
  REQUIRE(a.info().matrix().bottomRightCorner(2, 2).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.info().matrix().topRightCorner(2, 2).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.mean_of(landmark_key(10)) == Eigen::Vector2d(3.0, 4.0));
  REQUIRE_THROWS_AS(entropy(a), NotPositiveDefinite);
}

TEST_CASE("augment with no variables is the identity") {
  GaussianBelief b = identity_belief(5);
  GaussianBelief a = augment(b, {});
  REQUIRE(a.info().matrix() == b.info().matrix());
  REQUIRE(a.mean() == b.mean());
}

TEST_CASE("augment rejects duplicate variables") {
  GaussianBelief b = identity_belief(2);
  std::vector<NewVariable> vars{{landmark_key(0), Eigen::Vector2d(0.0, 0.0)}};
  REQUIRE_THROWS_AS(augment(b, vars), DuplicateVariable);
}

TEST_CASE("augment then new information restores positive definiteness") {
  GaussianBelief b = identity_belief(3);
  std::vector<NewVariable> vars{{landmark_key(0), Eigen::Vector2d(1.0, 1.0)}};
  GaussianBelief a = augment(b, vars);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2, 5);
  rows(0, 3) = 1.0;
  rows(1, 4) = 1.0;
  GaussianBelief fixed(InfoMatrix(a.info().matrix() + rows.transpose() * rows), a.mean(),
                       a.index());
  REQUIRE_NOTHROW(entropy(fixed));
}

TEST_CASE("propagate adds the block-form motion information") {
  GaussianBelief b = identity_belief(3);  // one pose at the origin
  MotionSpec motion = planar_odometry(Eigen::Matrix3d::Identity());
  std::vector<Action2> actions{{0.0, 0.0, 0.0}};
  GaussianBelief p = propagate(b, actions, motion);

  Eigen::MatrixXd expected(6, 6);
  expected << 2 * Eigen::Matrix3d::Identity(), -Eigen::Matrix3d::Identity(),
      -Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity();
  REQUIRE((p.info().matrix() - expected).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE_THAT(logdet_exact(p.info()), WithinAbs(0.0, 1e-12));
}

TEST_CASE("propagate with no actions returns the belief unchanged") {
  GaussianBelief b = identity_belief(3);
  MotionSpec motion = planar_odometry(Eigen::Matrix3d::Identity());
  GaussianBelief p = propagate(b, {}, motion);
  REQUIRE(p.info().matrix() == b.info().matrix());
}

TEST_CASE("propagate rejects a singular process noise") {
  GaussianBelief b = identity_belief(3);
  MotionSpec motion = planar_odometry(Eigen::Matrix3d::Zero());
  std::vector<Action2> actions{{1.0, 0.0, 0.0}};
  REQUIRE_THROWS_AS(propagate(b, actions, motion), NotPositiveDefinite);
}

TEST_CASE("dead-reckoning grows the current-pose marginal entropy") {
  Rng rng(17);
  GaussianBelief b = identity_belief(3);
  MotionSpec motion = planar_odometry(0.01 * Eigen::Matrix3d::Identity());
  std::vector<Action2> actions;
  for (int i = 0; i < 5; ++i)
    actions.push_back({rng.uniform(0.5, 1.5), 0.0, rng.uniform(-0.3, 0.3)});
  GaussianBelief p = propagate(b, actions, motion);

  auto pose_marginal_entropy = [](const GaussianBelief& belief, const VariableKey& key) {
    const CovarianceTable t = recover_covariance_entries(belief, std::vector<VariableKey>{key});
    return 0.5 * (3.0 * log_two_pi_e() + oracle::lu_logdet(t.block()));
  };
  const double before = pose_marginal_entropy(b, pose_key(0));
  const double after = pose_marginal_entropy(p, pose_key(5));
  REQUIRE(after > before);
}

TEST_CASE("covariance recovery on a diagonal information matrix") {
  Eigen::MatrixXd m(2, 2);
  m << 2.0, 0.0, 0.0, 4.0;
  GaussianBelief b(InfoMatrix(m), Eigen::VectorXd::Zero(2),
                   VariableIndexMap({landmark_key(0)}));
  const CovarianceTable t =
      recover_covariance_entries(b, std::vector<VariableKey>{landmark_key(0)});
  REQUIRE_THAT(t.block()(0, 0), WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(t.block()(1, 1), WithinAbs(0.25, 1e-12));
  REQUIRE_THAT(t.block()(0, 1), WithinAbs(0.0, 1e-12));
}

TEST_CASE("covariance recovery of the full set matches the dense inverse") {
  Rng rng(19);
  GaussianBelief b = oracle::random_belief(rng, 12);
  std::vector<VariableKey> all;
  for (const VariableIndex& v : b.index().vars()) all.push_back(v.key);
  const CovarianceTable t = recover_covariance_entries(b, all);
  const Eigen::MatrixXd expected = oracle::dense_inverse(b.info().matrix());
  REQUIRE((t.block() - expected).cwiseAbs().maxCoeff() < 1e-10);

  // logdet(Sigma) == -logdet(Lambda)
  REQUIRE_THAT(oracle::lu_logdet(t.block()), WithinAbs(-logdet_exact(b.info()), 1e-9));
}

TEST_CASE("covariance recovery of nothing is empty") {
  GaussianBelief b = identity_belief(4);
  const CovarianceTable t = recover_covariance_entries(b, {});
  REQUIRE(t.empty());
}

TEST_CASE("covariance recovery rejects unknown variables") {
  GaussianBelief b = identity_belief(4);
  REQUIRE_THROWS_AS(
      recover_covariance_entries(b, std::vector<VariableKey>{pose_key(99)}),
      UnknownVariable);
}

TEST_CASE("logdet_exact basics") {
  REQUIRE_THAT(logdet_exact(InfoMatrix::identity(5)), WithinAbs(0.0, 1e-15));
  Eigen::MatrixXd d = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  REQUIRE_THAT(logdet_exact(InfoMatrix(d)), WithinAbs(std::log(6.0), 1e-12));

  Rng rng(23);
  const Eigen::MatrixXd m = oracle::random_pd(rng, 50);
  REQUIRE(oracle::rel_diff(logdet_exact(InfoMatrix(m)), oracle::lu_logdet(m)) < 1e-9);

  Eigen::MatrixXd neg(1, 1);
  neg << -1.0;
  REQUIRE_THROWS_AS(logdet_exact(InfoMatrix(neg)), NotPositiveDefinite);
}

TEST_CASE("information matrices must be symmetric") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.5, 0.1, 1.0;
  REQUIRE_THROWS_AS(InfoMatrix(m), DimensionMismatch);
}
