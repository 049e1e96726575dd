#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "diffeoflow/geometry.hpp"
#include "diffeoflow/synth.hpp"

using namespace diffeoflow;

namespace {

// deterministic cross-platform uniform draw in [lo, hi)
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

TEST_CASE("shape validation") {
  MatX3 pts(2, 3);
  pts << 0, 0, 0, 1, 0, 0;
  const Shape shape = make_shape(pts);
  CHECK(shape.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(make_shape(MatX3(0, 3)), std::invalid_argument);

  TriangleList bad(1, 3);
  bad << 0, 1, 2;  // index 2 out of range
  CHECK_THROWS_AS(make_shape(pts, bad), std::invalid_argument);

  Shape nonfinite = shape;
  nonfinite.points(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate(nonfinite), std::invalid_argument);

  Shape badweights = shape;
  badweights.weights << 0.7, 0.7;
  CHECK_THROWS_AS(validate(badweights), std::invalid_argument);
}

TEST_CASE("mean edge length: unit square sides") {
  MatX3 pts(4, 3);
  pts << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
  const Shape square = make_shape(pts);
  // the four sides, via the 2-nearest-neighbor graph (diagonals are longer)
  const auto sides = knn_edge_graph(square, 2);
  CHECK(sides.size() == 4);
  CHECK(mean_edge_length(square, sides) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("mean edge length: two points, one edge") {
  MatX3 pts(2, 3);
  pts << 0, 0, 0, 2, 0, 0;
  const Shape shape = make_shape(pts);
  CHECK(mean_edge_length(shape) == doctest::Approx(2.0).epsilon(1e-15));  // knn fallback k=1
  CHECK_THROWS_WITH_AS(mean_edge_length(shape, EdgeFallback::none),
                       doctest::Contains("no connectivity"), std::runtime_error);
}

TEST_CASE("mean edge length: triangulated patch vs brute-force oracle") {
  std::mt19937 rng(7);
  MatX3 pts = random_points(rng, 12);
  TriangleList tris(10, 3);
  for (int t = 0; t < 10; ++t) {
    int a = static_cast<int>(rng() % 12), b = static_cast<int>(rng() % 12),
        c = static_cast<int>(rng() % 12);
    while (b == a) b = static_cast<int>(rng() % 12);
    while (c == a || c == b) c = static_cast<int>(rng() % 12);
    tris.row(t) << a, b, c;
  }
  const Shape shape = make_shape(pts, tris);

  // oracle: enumerate unique undirected edges directly
  std::set<std::pair<int, int>> unique;
  for (int t = 0; t < 10; ++t)
    for (int v = 0; v < 3; ++v) {
      const int i = tris(t, v), j = tris(t, (v + 1) % 3);
      unique.emplace(std::min(i, j), std::max(i, j));
    }
  double total = 0.0;
  for (const auto& [i, j] : unique) total += (pts.row(i) - pts.row(j)).norm();
  const double expected = total / static_cast<double>(unique.size());

  CHECK(mean_edge_length(shape) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("mean edge length scales linearly") {
  const Shape shape = synth_sphere(40, 1.0);
  Shape scaled = shape;
  scaled.points *= 3.5;
  CHECK(mean_edge_length(scaled) ==
        doctest::Approx(3.5 * mean_edge_length(shape)).epsilon(1e-12));
}

TEST_CASE("hausdorff: trivial cases") {
  std::mt19937 rng(3);
  const Shape a = make_shape(random_points(rng, 17));
  CHECK(hausdorff(a, a, 1.0).value == 0.0);
  CHECK(hausdorff(a, a, 0.4).value == 0.0);

  MatX3 p(1, 3), q(1, 3);
  p << 0, 0, 0;
  q << 1, 0, 0;
  CHECK(hausdorff(make_shape(p), make_shape(q), 1.0).value == doctest::Approx(1.0));

  CHECK_THROWS_AS(hausdorff(a, a, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(hausdorff(a, a, 1.5), std::invalid_argument);
}

TEST_CASE("hausdorff: translated sphere and all-pairs oracle") {
  const Shape sphere = synth_sphere(100, 1.0);
  Shape moved = sphere;
  moved.points.col(0).array() += 3.0;
  moved.points.col(1).array() += 4.0;

  // oracle: brute-force directed distances
  const auto directed = [](const MatX3& from, const MatX3& to) {
    double worst = 0.0;
    for (Index i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < to.rows(); ++j)
        best = std::min(best, (from.row(i) - to.row(j)).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  const double expected =
      std::max(directed(sphere.points, moved.points), directed(moved.points, sphere.points));

  const auto report = hausdorff(sphere, moved, 1.0);
  CHECK(report.value == doctest::Approx(expected).epsilon(1e-14));
  // rigid translation by (3,4,0): every nearest distance is at most 5 and
  // the extremal point along the translation attains it
  CHECK(report.value <= 5.0 + 1e-9);
  CHECK(report.value == doctest::Approx(5.0).epsilon(0.02));
}

TEST_CASE("hausdorff properties: symmetry, rigid invariance, percentile monotonicity") {
  std::mt19937 rng(11);
  const Shape a = make_shape(random_points(rng, 25));
  const Shape b = make_shape(random_points(rng, 30));

  CHECK(hausdorff(a, b, 0.95).value == doctest::Approx(hausdorff(b, a, 0.95).value));

  // common rigid motion
  const double angle = 0.7;
  Eigen::Matrix3d rot;
  rot = Eigen::AngleAxisd(angle, Vec3(1, 2, 3).normalized());
  const RowVec3 shift(0.3, -1.2, 2.0);
  Shape ar = a, br = b;
  ar.points = (a.points * rot.transpose()).rowwise() + shift;
  br.points = (b.points * rot.transpose()).rowwise() + shift;
  CHECK(hausdorff(ar, br, 0.95).value ==
        doctest::Approx(hausdorff(a, b, 0.95).value).epsilon(1e-10));

  double previous = 0.0;
  for (const double p : {0.1, 0.3, 0.5, 0.8, 0.95, 1.0}) {
    const auto rep = hausdorff(a, b, p);
    CHECK(rep.directed_ab >= previous);
    previous = rep.directed_ab;
  }
}

TEST_CASE("knn edge graph: collinear and square") {
  MatX3 line(3, 3);
  line << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  const auto edges = knn_edge_graph(make_shape(line), 1);
  CHECK(edges == std::vector<Edge>{{0, 1}, {1, 2}});

  MatX3 sq(4, 3);
  sq << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
  const auto sides = knn_edge_graph(make_shape(sq), 2);
  CHECK(sides == std::vector<Edge>{{0, 1}, {0, 3}, {1, 2}, {2, 3}});
}

TEST_CASE("knn edge graph vs brute-force oracle") {
  std::mt19937 rng(23);
  const Shape shape = make_shape(random_points(rng, 20));
  const int k = 6;

  std::set<Edge> expected;
  for (int i = 0; i < 20; ++i) {
    std::vector<std::pair<double, int>> order;
    for (int j = 0; j < 20; ++j)
      if (j != i)
        order.emplace_back((shape.points.row(i) - shape.points.row(j)).squaredNorm(), j);
    std::sort(order.begin(), order.end());
    for (int r = 0; r < k; ++r)
      expected.emplace(std::min(i, order[r].second), std::max(i, order[r].second));
  }
  const auto edges = knn_edge_graph(shape, k);
  CHECK(edges == std::vector<Edge>(expected.begin(), expected.end()));

  CHECK_THROWS_AS(knn_edge_graph(shape, 0), std::invalid_argument);
  CHECK_THROWS_AS(knn_edge_graph(shape, 20), std::invalid_argument);
}
