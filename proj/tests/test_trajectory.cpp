#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "diffeoflow/trajectory.hpp"
#include "oracles.hpp"

using namespace diffeoflow;
using oracles::random_blockvec;
using oracles::random_points;

TEST_CASE("time grid") {
  const TimeGrid grid{5};
  CHECK(grid.h() == doctest::Approx(1.0 / 6.0).epsilon(1e-16));
  CHECK(grid.time(1) == 0.0);
  CHECK(grid.time(6) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("zero control is a fixed point") {
  std::mt19937 rng(2);
  const MatX3 x0 = random_points(rng, 8);
  const TimeGrid grid{4};
  const ControlTrajectory a(8, 4);
  const GaussianKernel kernel{0.7, true};
  for (const auto anchors : {KernelAnchors::current_state, KernelAnchors::frozen_template}) {
    const StateTrajectory x = rollout(x0, a, kernel, grid, anchors);
    for (int j = 0; j <= 4; ++j) CHECK((x.block(j) - x0).norm() == 0.0);
  }
}

TEST_CASE("single-point one-step rollout") {
  MatX3 x0(1, 3);
  x0 << 0.2, -0.4, 0.9;
  const TimeGrid grid{1};  // h = 1/2
  ControlTrajectory a(1, 1);
  a.block(0) << 1, 0, 0;
  const GaussianKernel kernel{1.0, true};
  const StateTrajectory x = rollout(x0, a, kernel, grid);
  const double kappa = std::pow(2.0 * M_PI, -1.5);
  const MatX3 expected = x0 + 0.5 * kappa * a.block(0);
  CHECK((x.block(1) - expected).norm() <= 1e-16);
}

TEST_CASE("rollout satisfies the constraint in both anchor modes") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const int m = 3 + static_cast<int>(rng() % 4);
    const int n = 1 + static_cast<int>(rng() % 3);
    const TimeGrid grid{n};
    const MatX3 x0 = random_points(rng, m);
    const BlockVec a = random_blockvec(rng, m, n);
    const GaussianKernel kernel{0.8, true};
    const StateTrajectory q = constraint_rhs(x0, grid);

    // frozen anchors
    {
      const StateTrajectory x = rollout(x0, a, kernel, grid, KernelAnchors::frozen_template);
      const GramOperator frozen(x0, kernel);
      const VecX residual =
          apply_Gx(x).vec() + apply_Ga(frozen, grid, a).vec() - q.vec();
      CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-12);
    }
    // state-dependent anchors: B^j evaluated at the rollout's own states
    {
      const StateTrajectory x = rollout(x0, a, kernel, grid, KernelAnchors::current_state);
      const VecX residual =
          apply_Gx(x).vec() + apply_Ga(kernel, x, grid, a).vec() - q.vec();
      CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
}

TEST_CASE("Gx rows: constant trajectory") {
  std::mt19937 rng(4);
  const MatX3 x0 = random_points(rng, 5);
  const TimeGrid grid{3};
  StateTrajectory x(5, 4);
  for (int j = 0; j <= 3; ++j) x.block(j) = x0;
  const StateTrajectory out = apply_Gx(x);
  CHECK((out.block(0) - x0).norm() == 0.0);
  for (int j = 1; j <= 3; ++j) CHECK(out.block(j).norm() == 0.0);
}

TEST_CASE("adjoint identities") {
  std::mt19937 rng(13);
  const int m = 6, n = 4;
  const TimeGrid grid{n};
  const MatX3 x0 = random_points(rng, m);
  const GaussianKernel kernel{0.9, true};
  const GramOperator frozen(x0, kernel);
  const StateTrajectory anchors = [&] {
    StateTrajectory s(m, n + 1);
    for (int j = 0; j <= n; ++j) s.block(j) = random_points(rng, m);
    return s;
  }();

  for (int probe = 0; probe < 20; ++probe) {
    const BlockVec xs = random_blockvec(rng, m, n + 1);
    const BlockVec vs = random_blockvec(rng, m, n + 1);
    const double lhs_x = apply_Gx(xs).vec().dot(vs.vec());
    const double rhs_x = xs.vec().dot(apply_GxT(vs).vec());
    CHECK(lhs_x == doctest::Approx(rhs_x).epsilon(1e-12));

    const BlockVec as = random_blockvec(rng, m, n);
    const double lhs_a = apply_Ga(frozen, grid, as).vec().dot(vs.vec());
    const double rhs_a = as.vec().dot(apply_GaT(frozen, grid, vs).vec());
    CHECK(lhs_a == doctest::Approx(rhs_a).epsilon(1e-12));

    const double lhs_af = apply_Ga(kernel, anchors, grid, as).vec().dot(vs.vec());
    const double rhs_af = as.vec().dot(apply_GaT(kernel, anchors, grid, vs).vec());
    CHECK(lhs_af == doctest::Approx(rhs_af).epsilon(1e-12));
  }
}

TEST_CASE("matrix-free operators match dense assembly") {
  std::mt19937 rng(17);
  for (const auto [m, n] : {std::pair{2, 1}, {4, 3}, {6, 2}}) {
    const TimeGrid grid{n};
    const MatX3 x0 = random_points(rng, m);
    const GaussianKernel kernel{0.75, true};
    const GramOperator frozen(x0, kernel);

    const MatX gx = oracles::dense_Gx(m, n);
    const MatX ga = oracles::dense_Ga(frozen.matrix(), grid);

    const BlockVec xs = random_blockvec(rng, m, n + 1);
    const BlockVec as = random_blockvec(rng, m, n);

    CHECK((apply_Gx(xs).vec() - gx * xs.vec()).norm() <= 1e-12);
    CHECK((apply_GxT(xs).vec() - gx.transpose() * xs.vec()).norm() <= 1e-12);
    CHECK((apply_Ga(frozen, grid, as).vec() - ga * as.vec()).norm() <= 1e-12);
    CHECK((apply_GaT(frozen, grid, xs).vec() - ga.transpose() * xs.vec()).norm() <= 1e-12);
  }
}

TEST_CASE("observe_terminal selects the last block") {
  std::mt19937 rng(21);
  const BlockVec x = random_blockvec(rng, 7, 4);
  CHECK((observe_terminal(x) - x.block(3)).norm() == 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
  const TimeGrid grid{2};
  const MatX3 x0 = MatX3::Zero(3, 3);
  const ControlTrajectory wrong_blocks(3, 5);
  CHECK_THROWS_AS(rollout(x0, wrong_blocks, GaussianKernel{1.0, true}, grid),
                  std::invalid_argument);
}
