#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "diffeoflow/kernels.hpp"
#include "diffeoflow/synth.hpp"

using namespace diffeoflow;

namespace {

double uniform(std::mt19937& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng()) / 4294967296.0);
}

MatX3 random_points(std::mt19937& rng, int m, double scale = 1.0) {
  MatX3 pts(m, 3);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < 3; ++c) pts(i, c) = uniform(rng, -scale, scale);
  return pts;
}

}  // namespace

TEST_CASE("gaussian kernel closed forms") {
  const GaussianKernel normalized{1.0, true};
  const Vec3 origin = Vec3::Zero();
  CHECK(normalized(origin, origin) ==
        doctest::Approx(std::pow(2.0 * M_PI, -1.5)).epsilon(1e-15));

  const GaussianKernel plain{1.0, false};
  CHECK(plain(origin, origin) == 1.0);
  CHECK(plain(Vec3(1, 0, 0), origin) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(plain(Vec3(1, 0, 0), origin) == plain(origin, Vec3(1, 0, 0)));
}

TEST_CASE("gram matrix symmetry and PSD") {
  std::mt19937 rng(5);
  const MatX3 pts = random_points(rng, 30);
  const GaussianKernel kernel{0.6, true};
  const MatX gram = gram_matrix(kernel, pts);

  CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Index i = 0; i < 30; ++i) CHECK(gram(i, i) == kernel.self_value());

  for (int probe = 0; probe < 10; ++probe) {
    VecX a(30);
    for (int i = 0; i < 30; ++i) a[i] = uniform(rng, -1, 1);
    CHECK(a.dot(gram * a) >= -1e-10 * a.squaredNorm());
  }
}

TEST_CASE("gram matvec vs dense oracle") {
  std::mt19937 rng(6);
  for (const int m : {1, 15, 50}) {
    const MatX3 pts = random_points(rng, m);
    const GaussianKernel kernel{0.8, true};
    const GramOperator op(pts, kernel);
    MatX3 coeffs = random_points(rng, m);

    // dense oracle: direct kernel sums
    MatX3 expected = MatX3::Zero(m, 3);
    for (int l = 0; l < m; ++l)
      for (int k = 0; k < m; ++k)
        expected.row(l) += kernel(pts.row(k), pts.row(l)) * coeffs.row(k);

    const MatX3 got = gram_matvec(op, coeffs);
    CHECK((got - expected).norm() <= 1e-12 * std::max(1.0, expected.norm()));

    coeffs.setZero();
    CHECK(gram_matvec(op, coeffs).norm() == 0.0);
  }
}

TEST_CASE("gram matvec single point") {
  MatX3 pt(1, 3);
  pt << 0.3, -0.2, 1.0;
  const GaussianKernel kernel{2.0, true};
  const GramOperator op(pt, kernel);
  MatX3 a(1, 3);
  a << 1, 2, 3;
  CHECK((gram_matvec(op, a) - kernel.self_value() * a).norm() == 0.0);
}

TEST_CASE("sigma_v policy") {
  // two points at distance 1: hbar = 1, so tau_v = sqrt(2) gives sigma 1
  MatX3 pts(2, 3);
  pts << 0, 0, 0, 1, 0, 0;
  const Shape shape = make_shape(pts);
  CHECK(sigma_v_policy(shape, std::sqrt(2.0)) == doctest::Approx(1.0).epsilon(1e-15));

  // the paper's mitral-valve mean edge length, against direct arithmetic
  MatX3 paper(2, 3);
  paper << 0, 0, 0, 1.2127, 0, 0;
  const Shape paper_shape = make_shape(paper);
  CHECK(sigma_v_policy(paper_shape, 6.0) ==
        doctest::Approx(6.0 * std::sqrt(0.5) * 1.2127).epsilon(1e-15));

  CHECK_THROWS_AS(sigma_v_policy(shape, 0.0), std::invalid_argument);
}

TEST_CASE("sigma_s policy") {
  // identical shapes: lower bound hbar_1 is active
  MatX3 pts(2, 3);
  pts << 0, 0, 0, 1, 0, 0;
  const Shape shape = make_shape(pts);
  CHECK(sigma_s_policy(shape, shape, 1.0) == doctest::Approx(1.0).epsilon(1e-15));

  // dist_H = 10, hbar_1 = 1, tau_s = 1 -> 5
  Shape far = shape;
  far.points.col(2).array() += 10.0;
  CHECK(sigma_s_policy(shape, far, 1.0) == doctest::Approx(5.0).epsilon(1e-12));

  // the paper's table values: max(hbar_1, tau_s dist/2)
  CHECK(std::max(1.312801, 1.0 * 2.981669 / 2.0) == doctest::Approx(1.4908345));

  CHECK_THROWS_AS(sigma_s_policy(shape, shape, -1.0), std::invalid_argument);
}

TEST_CASE("sigma policies are scale-covariant") {
  const Shape a = synth_sphere(30, 1.0);
  Shape b = synth_sphere(30, 1.0);
  b.points.col(0).array() += 0.4;

  Shape as = a, bs = b;
  const double s = 2.75;
  as.points *= s;
  bs.points *= s;

  CHECK(sigma_v_policy(as, 6.0) == doctest::Approx(s * sigma_v_policy(a, 6.0)).epsilon(1e-12));
  CHECK(sigma_s_policy(as, bs, 1.0) ==
        doctest::Approx(s * sigma_s_policy(a, b, 1.0)).epsilon(1e-12));
}

TEST_CASE("gram cache size cap") {
  CHECK_THROWS_AS(GramOperator(MatX3::Zero(20001, 3), GaussianKernel{1.0, true}),
                  std::invalid_argument);
}
