#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "diffeoflow/linsolve.hpp"
#include "oracles.hpp"

using namespace diffeoflow;
using oracles::uniform;

namespace {

MatX random_spd(std::mt19937& rng, Index n) {
  MatX a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = uniform(rng, -1, 1);
  MatX spd = a * a.transpose();
  spd.diagonal().array() += 0.5 * n;
  return spd;
}

LinearOperator matrix_op(const MatX& a) {
  return [a](const VecX& v) { return VecX(a * v); };
}

}  // namespace

TEST_CASE("pcg: identity converges in one iteration") {
  VecX b(4);
  b << 1, -2, 3, 0.5;
  const auto out = pcg(matrix_op(MatX::Identity(4, 4)), b, PcgConfig{1e-12, 50, {}});
  CHECK(out.reason == PcgStop::converged);
  CHECK(out.iterations == 1);
  CHECK((out.solution - b).norm() <= 1e-12);
}

TEST_CASE("pcg: zero rhs short-circuits") {
  const auto out = pcg(matrix_op(MatX::Identity(3, 3)), VecX::Zero(3), PcgConfig{1e-8, 10, {}});
  CHECK(out.iterations == 0);
  CHECK(out.solution.norm() == 0.0);
  CHECK(out.reason == PcgStop::converged);
}

TEST_CASE("pcg: jacobi preconditioner on a diagonal system") {
  MatX a = MatX::Zero(3, 3);
  a.diagonal() << 1, 10, 100;
  VecX b(3);
  b << 1, 1, 1;
  PcgConfig cfg{1e-12, 10, [](const VecX& r) {
                  VecX z(3);
                  z << r[0], r[1] / 10, r[2] / 100;
                  return z;
                }};
  const auto out = pcg(matrix_op(a), b, cfg);
  CHECK(out.reason == PcgStop::converged);
  CHECK(out.iterations <= 3);
  VecX expected(3);
  expected << 1, 0.1, 0.01;
  CHECK((out.solution - expected).norm() <= 1e-10);
}

TEST_CASE("pcg: negative curvature on the first direction") {
  MatX a = MatX::Zero(2, 2);
  a.diagonal() << 1, -1;
  VecX b(2);
  b << 0, 1;
  // first direction p = b has p^T A p = -1: fall back to steepest descent
  const auto out = pcg(matrix_op(a), b, PcgConfig{1e-10, 10, {}});
  CHECK(out.reason == PcgStop::negative_curvature);
  CHECK(out.iterations == 0);
  CHECK((out.solution - b).norm() <= 1e-14);
}

TEST_CASE("pcg: negative curvature after progress returns the iterate") {
  MatX a = MatX::Zero(2, 2);
  a.diagonal() << 1, -1;
  VecX b(2);
  b << 1, 0.1;
  const auto out = pcg(matrix_op(a), b, PcgConfig{1e-14, 10, {}});
  CHECK(out.reason == PcgStop::negative_curvature);
  CHECK(out.iterations >= 1);
  CHECK(out.solution.allFinite());
}

TEST_CASE("pcg: exact preconditioner converges in one iteration") {
  std::mt19937 rng(61);
  const MatX a = random_spd(rng, 12);
  const CholeskyFactor factor = cholesky_spd(a);
  VecX b(12);
  for (int i = 0; i < 12; ++i) b[i] = uniform(rng, -1, 1);
  PcgConfig cfg{1e-12, 50, [&factor](const VecX& r) { return factor.solve(r); }};
  const auto out = pcg(matrix_op(a), b, cfg);
  CHECK(out.reason == PcgStop::converged);
  CHECK(out.iterations == 1);
}

TEST_CASE("pcg: monotone A-norm error on SPD systems") {
  std::mt19937 rng(67);
  const MatX a = random_spd(rng, 10);
  VecX b(10);
  for (int i = 0; i < 10; ++i) b[i] = uniform(rng, -1, 1);
  const VecX exact = a.partialPivLu().solve(b);
  double previous = std::numeric_limits<double>::infinity();
  for (int iters = 1; iters <= 10; ++iters) {
    const auto out = pcg(matrix_op(a), b, PcgConfig{1e-16, iters, {}});
    const VecX err = out.solution - exact;
    const double anorm = std::sqrt(err.dot(a * err));
    CHECK(anorm <= previous + 1e-13);
    previous = anorm;
  }
}

TEST_CASE("cholesky: identity and hand factorization") {
  const CholeskyFactor id = cholesky_spd(MatX::Identity(3, 3));
  CHECK((id.matrixL() - MatX::Identity(3, 3)).norm() == 0.0);

  MatX a(2, 2);
  a << 4, 2, 2, 3;
  const CholeskyFactor factor = cholesky_spd(a);
  MatX expected(2, 2);
  expected << 2, 0, 1, std::sqrt(2.0);
  CHECK((factor.matrixL() - expected).norm() <= 1e-15);
}

TEST_CASE("cholesky: reconstruction and round trip") {
  std::mt19937 rng(71);
  const MatX a = random_spd(rng, 20);
  const CholeskyFactor factor = cholesky_spd(a);
  const MatX rebuilt = factor.matrixL() * factor.matrixL().transpose();
  CHECK((rebuilt - a).norm() <= 1e-12 * a.norm());

  VecX x(20);
  for (int i = 0; i < 20; ++i) x[i] = uniform(rng, -2, 2);
  const VecX roundtrip = solve_with_factor(factor, VecX(a * x));
  CHECK((roundtrip - x).norm() <= 1e-10 * x.norm());
}

TEST_CASE("cholesky: error reporting") {
  MatX asym(2, 2);
  asym << 1, 0.5, 0.2, 1;
  CHECK_THROWS_AS(cholesky_spd(asym), std::invalid_argument);

  MatX indef(2, 2);
  indef << 1, 2, 2, 1;  // eigenvalues 3, -1
  CHECK_THROWS_WITH_AS(cholesky_spd(indef), doctest::Contains("pivot at index 1"),
                       std::runtime_error);
}

TEST_CASE("block diagonal inverse") {
  // all-identity blocks return the input
  const CholeskyFactor id = cholesky_spd(MatX::Identity(3, 3));
  VecX v(5);
  v << 1, 2, 3, 4, 5;
  const std::vector<DiagBlockRef> blocks = {{&id, 0.0, 3}, {nullptr, 1.0, 2}};
  CHECK((block_diag_apply_inverse(blocks, v) - v).norm() == 0.0);

  // one SPD block plus a scalar block, vs per-block dense solves
  MatX a(2, 2);
  a << 4, 1, 1, 3;
  const CholeskyFactor fa = cholesky_spd(a);
  VecX w(3);
  w << 1, -1, 6;
  const std::vector<DiagBlockRef> mixed = {{&fa, 0.0, 2}, {nullptr, 2.0, 1}};
  const VecX got = block_diag_apply_inverse(mixed, w);
  const Eigen::Vector2d head = a.partialPivLu().solve(w.head(2));
  CHECK((got.head(2) - head).norm() <= 1e-12);
  CHECK(got[2] == doctest::Approx(3.0));

  // dense oracle on a tiny stacked system with a repeated factor
  std::mt19937 rng(73);
  const MatX spd = random_spd(rng, 3);
  const CholeskyFactor fs = cholesky_spd(spd);
  VecX big(9);
  for (int i = 0; i < 9; ++i) big[i] = uniform(rng, -1, 1);
  MatX dense = MatX::Zero(9, 9);
  for (int rep = 0; rep < 2; ++rep) dense.block(3 * rep, 3 * rep, 3, 3) = spd;
  dense.block(6, 6, 3, 3) = 0.5 * MatX::Identity(3, 3);
  const std::vector<DiagBlockRef> stacked = {{&fs, 0.0, 6}, {nullptr, 0.5, 3}};
  CHECK((block_diag_apply_inverse(stacked, big) - dense.partialPivLu().solve(big)).norm() <=
        1e-10);

  CHECK_THROWS_AS(block_diag_apply_inverse(mixed, VecX::Zero(5)), std::invalid_argument);
}
