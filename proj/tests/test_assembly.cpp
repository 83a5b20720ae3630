#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "gkmm/assembly.hpp"
#include "gkmm/kernels.hpp"
#include "gkmm/solver.hpp"
#include "gkmm/synthlab.hpp"
#include "oracles.hpp"

using namespace gkmm;

namespace {

PartitionedData single_block(const Eigen::MatrixXd& m) {
  PartitionedData pd;
  pd.blocks.push_back(m);
  pd.weights = Eigen::VectorXd::Ones(1);
  return pd;
}

}  // namespace

TEST_CASE("build_basis concatenates test blocks in order") {
  PartitionedData test;
  Eigen::MatrixXd b1(2, 1), b2(3, 1);
  b1 << 1, 2;
  b2 << 3, 4, 5;
  test.blocks = {b1, b2};
  test.weights = Eigen::VectorXd::Constant(2, 0.5);
  const Eigen::MatrixXd basis = build_basis(test);
  REQUIRE(basis.rows() == 5);
  CHECK(basis(0, 0) == 1);
  CHECK(basis(1, 0) == 2);
  CHECK(basis(4, 0) == 5);

  const Eigen::MatrixXd single = build_basis(single_block(b2));
  CHECK(single == b2);

  PartitionedData big;
  big.blocks = {Eigen::MatrixXd::Zero(100, 1), Eigen::MatrixXd::Ones(100, 1)};
  big.weights = Eigen::VectorXd::Constant(2, 0.5);
  CHECK(build_basis(big).rows() == 200);
}

TEST_CASE("assemble matches the hand-evaluated single-partition instance") {
  Eigen::MatrixXd train_m(2, 1), test_m(1, 1);
  train_m << 0, 1;
  test_m << 0;
  KernelConfig cfg;
  cfg.sigma = 1.0;
  const GkmmProblem p =
      assemble(single_block(train_m), single_block(test_m), cfg, 10.0, 0.5);
  const double e1 = std::exp(-1.0), e2 = std::exp(-2.0);
  REQUIRE(p.size() == 1);
  CHECK(p.P(0, 0) == doctest::Approx(0.5 * (1 + 3 * e2)).epsilon(1e-12));
  CHECK(p.P(0, 0) == doctest::Approx(0.70300293).epsilon(1e-6));
  CHECK(p.q[0] == doctest::Approx(2 + 2 * e2).epsilon(1e-12));
  CHECK(p.q[0] == doctest::Approx(2.27067056).epsilon(1e-6));
  CHECK(p.xi[0] == doctest::Approx((1 + e1) / 2).epsilon(1e-12));
  CHECK(p.xi[0] == doctest::Approx(0.68393972).epsilon(1e-6));
}

TEST_CASE("assemble stays finite in the constant-kernel degenerate case") {
  // identical points make every kernel value 1
  const Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(3, 1);
  KernelConfig cfg;
  cfg.sigma = 1.0;
  const GkmmProblem p =
      assemble(single_block(pts), single_block(pts), cfg, 10.0, 0.5);
  CHECK(p.P.allFinite());
  CHECK(p.q.allFinite());
  CHECK(p.xi.allFinite());
  CHECK(p.P(0, 0) > 0.0);
}

TEST_CASE("single-block coefficients reduce to the expected scalars") {
  RngStream rng(17);
  Eigen::MatrixXd train_m(4, 2), test_m(3, 2);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c) train_m(r, c) = rng.gaussian();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 2; ++c) test_m(r, c) = rng.gaussian();
  KernelConfig cfg;
  cfg.sigma = 0.9;
  const GkmmProblem p =
      assemble(single_block(train_m), single_block(test_m), cfg, 10.0, 0.5);

  // N = N' = 1: H = (n'^2/n'^2) * K/2, h = (n'^2/(n n')) * sum K, so
  // P = A^T (K/2) A and q = A^T h with n'_max = n'.
  const Eigen::MatrixXd A = gram(train_m, test_m, cfg);
  const Eigen::MatrixXd K = gram(train_m, train_m, cfg);
  const Eigen::MatrixXd P_ref = A.transpose() * (0.5 * K) * A;
  const Eigen::VectorXd h_ref =
      (16.0 / (3.0 * 4.0)) * gram(train_m, test_m, cfg).rowwise().sum();
  const Eigen::VectorXd q_ref = A.transpose() * h_ref;
  CHECK((p.P - P_ref).lpNorm<Eigen::Infinity>() <= 1e-12 * P_ref.norm());
  CHECK((p.q - q_ref).lpNorm<Eigen::Infinity>() <= 1e-12 * q_ref.norm());
}

TEST_CASE("empirical_loss basics") {
  GkmmProblem p;
  p.P = Eigen::MatrixXd::Identity(1, 1);
  p.q = Eigen::VectorXd::Constant(1, 2.0);
  CHECK(empirical_loss(p, Eigen::VectorXd::Zero(1)) == 0.0);
  CHECK(empirical_loss(p, Eigen::VectorXd::Ones(1)) == -1.0);
  CHECK_THROWS_AS(empirical_loss(p, Eigen::VectorXd::Zero(2)), Error);
}

TEST_CASE("block form equals the direct quadruple sum on random instances") {
  RngStream rng(101);
  int done = 0;
  while (done < 12) {
    const auto inst = oracles::random_instance(rng);
    GkmmProblem p;
    try {
      p = assemble(inst.train, inst.test, inst.kernel, inst.B, inst.eps);
    } catch (const Error&) {
      continue;  // infeasible draw
    }
    Eigen::VectorXd theta(p.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) theta[k] = rng.uniform();
    const double fast = empirical_loss(p, theta);
    const double slow = oracles::quadruple_sum_loss(inst.train, inst.test,
                                                    inst.kernel, theta, p.basis);
    CHECK(std::abs(fast - slow) <= 1e-9 * std::max(1.0, std::abs(slow)));
    ++done;
  }
}

TEST_CASE("P is symmetric and PSD up to the ridge bound") {
  RngStream rng(55);
  int done = 0;
  while (done < 8) {
    const auto inst = oracles::random_instance(rng);
    GkmmProblem p;
    try {
      p = assemble(inst.train, inst.test, inst.kernel, inst.B, inst.eps);
    } catch (const Error&) {
      continue;
    }
    CHECK((p.P - p.P.transpose()).lpNorm<Eigen::Infinity>() <=
          1e-10 * std::max(1.0, p.P.lpNorm<Eigen::Infinity>()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.P);
    CHECK(es.eigenvalues().minCoeff() >=
          -1e-8 * p.P.trace() / static_cast<double>(p.size()));
    ++done;
  }
}

TEST_CASE("refinement invariance under size-proportional splits") {
  RngStream rng(303);
  Eigen::MatrixXd train_m(9, 1), test_m(6, 1);
  for (int r = 0; r < 9; ++r) train_m(r, 0) = rng.gaussian();
  for (int r = 0; r < 6; ++r) test_m(r, 0) = rng.gaussian();
  KernelConfig cfg;
  cfg.sigma = 0.8;

  const PartitionedData train = single_block(train_m);
  const PartitionedData test = single_block(test_m);
  const GkmmProblem base = assemble(train, test, cfg, 20.0, 0.3);

  SUBCASE("train split scales P and q by the n'_max ratio, xi unchanged") {
    PartitionedData split;
    split.blocks = {train_m.topRows(3), train_m.bottomRows(6)};
    split.weights = Eigen::VectorXd(2);
    split.weights << 3.0 / 9.0, 6.0 / 9.0;
    const GkmmProblem refined = assemble(split, test, cfg, 20.0, 0.3);
    // n'_max drops from 9 to 6
    const double scale = (6.0 * 6.0) / (9.0 * 9.0);
    CHECK((refined.xi - base.xi).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((refined.P - scale * base.P).lpNorm<Eigen::Infinity>() <=
          1e-10 * base.P.lpNorm<Eigen::Infinity>());
    CHECK((refined.q - scale * base.q).lpNorm<Eigen::Infinity>() <=
          1e-10 * base.q.lpNorm<Eigen::Infinity>());

    const Eigen::VectorXd t1 = solve(base).theta;
    const Eigen::VectorXd t2 = solve(refined).theta;
    CHECK((t1 - t2).lpNorm<Eigen::Infinity>() <= 1e-5);
  }

  SUBCASE("test split leaves P, q, xi unchanged") {
    PartitionedData split;
    split.blocks = {test_m.topRows(2), test_m.bottomRows(4)};
    split.weights = Eigen::VectorXd(2);
    split.weights << 2.0 / 6.0, 4.0 / 6.0;
    const GkmmProblem refined = assemble(train, split, cfg, 20.0, 0.3);
    CHECK((refined.P - base.P).lpNorm<Eigen::Infinity>() <=
          1e-12 * std::max(1.0, base.P.lpNorm<Eigen::Infinity>()));
    CHECK((refined.q - base.q).lpNorm<Eigen::Infinity>() <=
          1e-12 * std::max(1.0, base.q.lpNorm<Eigen::Infinity>()));
    CHECK((refined.xi - base.xi).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("permutation equivariance") {
  RngStream rng(77);
  Eigen::MatrixXd train_m(5, 1), test_m(4, 1);
  for (int r = 0; r < 5; ++r) train_m(r, 0) = rng.gaussian();
  for (int r = 0; r < 4; ++r) test_m(r, 0) = rng.gaussian();
  KernelConfig cfg;
  cfg.sigma = 1.1;

  const GkmmProblem base =
      assemble(single_block(train_m), single_block(test_m), cfg, 20.0, 0.3);

  SUBCASE("permuting train samples leaves (P, q, xi) unchanged") {
    Eigen::MatrixXd perm(5, 1);
    perm << train_m(4, 0), train_m(2, 0), train_m(0, 0), train_m(1, 0), train_m(3, 0);
    const GkmmProblem other =
        assemble(single_block(perm), single_block(test_m), cfg, 20.0, 0.3);
    CHECK((other.P - base.P).lpNorm<Eigen::Infinity>() <=
          1e-12 * std::max(1.0, base.P.lpNorm<Eigen::Infinity>()));
    CHECK((other.q - base.q).lpNorm<Eigen::Infinity>() <=
          1e-12 * std::max(1.0, base.q.lpNorm<Eigen::Infinity>()));
    CHECK((other.xi - base.xi).lpNorm<Eigen::Infinity>() <= 1e-12);
  }

  SUBCASE("permuting test samples permutes the theta coordinates") {
    std::vector<int> pi = {2, 0, 3, 1};  // new row r = old row pi[r]
    Eigen::MatrixXd perm(4, 1);
    for (int r = 0; r < 4; ++r) perm(r, 0) = test_m(pi[r], 0);
    const GkmmProblem other =
        assemble(single_block(train_m), single_block(perm), cfg, 20.0, 0.3);
    for (int r = 0; r < 4; ++r) {
      CHECK(std::abs(other.q[r] - base.q[pi[r]]) <= 1e-12 * std::abs(base.q[pi[r]]));
      CHECK(std::abs(other.xi[r] - base.xi[pi[r]]) <= 1e-12);
      for (int s = 0; s < 4; ++s) {
        CHECK(std::abs(other.P(r, s) - base.P(pi[r], pi[s])) <=
              1e-12 * std::max(1.0, std::abs(base.P(pi[r], pi[s]))));
      }
    }
  }
}

TEST_CASE("assemble fails fast when the slab is unreachable") {
  Eigen::MatrixXd train_m(2, 1), test_m(1, 1);
  train_m << 0, 100.0;
  test_m << 0;
  KernelConfig cfg;
  cfg.sigma = 50.0;  // kernel values collapse, xi tiny
  try {
    assemble(single_block(train_m), single_block(test_m), cfg, 1e-3, 1e-3);
    FAIL("expected InfeasibleProblem");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InfeasibleProblem);
  }
}
