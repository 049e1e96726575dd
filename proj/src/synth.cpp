#include "diffeoflow/synth.hpp"

#include <array>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

namespace diffeoflow {

namespace {

struct Face {
  int a, b, c;
  Vec3 normal;
  double offset;  // plane is normal . x = offset
  bool alive = true;
};

Face make_face(const MatX3& pts, int a, int b, int c) {
  Face face{a, b, c, Vec3::Zero(), 0.0, true};
  const Vec3 u = (pts.row(b) - pts.row(a)).transpose();
  const Vec3 v = (pts.row(c) - pts.row(a)).transpose();
  face.normal = u.cross(v);
  face.offset = face.normal.dot(pts.row(a).transpose());
  return face;
}

double signed_dist(const Face& face, const MatX3& pts, int p) {
  return face.normal.dot(pts.row(p).transpose()) - face.offset;
}

}  // namespace

TriangleList convex_hull_triangles(const MatX3& points) {
  const Index m = points.rows();
  if (m < 4) throw std::invalid_argument("convex_hull_triangles: need at least 4 points");
  const double scale =
      (points.colwise().maxCoeff() - points.colwise().minCoeff()).norm();
  const double eps = 1e-12 * std::max(scale, 1.0) * scale;

  // initial tetrahedron from extreme points
  int p0 = 0;
  for (Index i = 1; i < m; ++i)
    if (points(i, 0) < points(p0, 0)) p0 = static_cast<int>(i);
  int p1 = -1;
  double best = -1.0;
  for (Index i = 0; i < m; ++i) {
    const double d = (points.row(i) - points.row(p0)).squaredNorm();
    if (d > best) { best = d; p1 = static_cast<int>(i); }
  }
  int p2 = -1;
  best = -1.0;
  for (Index i = 0; i < m; ++i) {
    const Vec3 u = (points.row(p1) - points.row(p0)).transpose();
    const Vec3 v = (points.row(i) - points.row(p0)).transpose();
    const double d = u.cross(v).squaredNorm();
    if (d > best) { best = d; p2 = static_cast<int>(i); }
  }
  int p3 = -1;
  best = -1.0;
  {
    const Face base = make_face(points, p0, p1, p2);
    for (Index i = 0; i < m; ++i) {
      const double d = std::abs(signed_dist(base, points, static_cast<int>(i)));
      if (d > best) { best = d; p3 = static_cast<int>(i); }
    }
    if (!(best > eps))
      throw std::invalid_argument("convex_hull_triangles: points are coplanar");
  }

  std::vector<Face> faces;
  const auto add_oriented = [&](int a, int b, int c, int opposite) {
    Face face = make_face(points, a, b, c);
    if (signed_dist(face, points, opposite) > 0.0) {
      std::swap(face.b, face.c);
      face.normal = -face.normal;
      face.offset = -face.offset;
    }
    faces.push_back(face);
  };
  add_oriented(p0, p1, p2, p3);
  add_oriented(p0, p1, p3, p2);
  add_oriented(p0, p2, p3, p1);
  add_oriented(p1, p2, p3, p0);

  for (Index i = 0; i < m; ++i) {
    const int p = static_cast<int>(i);
    if (p == p0 || p == p1 || p == p2 || p == p3) continue;
    std::vector<int> visible;
    for (int f = 0; f < static_cast<int>(faces.size()); ++f)
      if (faces[f].alive && signed_dist(faces[f], points, p) > eps) visible.push_back(f);
    if (visible.empty()) continue;  // inside the current hull

    // horizon: directed edges of visible faces whose reverse is not visible
    std::map<std::pair<int, int>, int> directed;
    for (int f : visible) {
      const Face& face = faces[f];
      directed[{face.a, face.b}] = f;
      directed[{face.b, face.c}] = f;
      directed[{face.c, face.a}] = f;
    }
    std::vector<std::pair<int, int>> horizon;
    for (const auto& [edge, f] : directed)
      if (directed.find({edge.second, edge.first}) == directed.end()) horizon.push_back(edge);
    for (int f : visible) faces[f].alive = false;
    for (const auto& [u, v] : horizon) faces.push_back(make_face(points, u, v, p));
  }

  std::vector<std::array<int, 3>> alive;
  for (const Face& face : faces)
    if (face.alive) alive.push_back({face.a, face.b, face.c});
  TriangleList triangles(static_cast<Index>(alive.size()), 3);
  for (Index t = 0; t < triangles.rows(); ++t)
    triangles.row(t) << alive[t][0], alive[t][1], alive[t][2];
  return triangles;
}

namespace {

// mt19937 draws mapped to [-1, 1] without std::uniform_real_distribution,
// which is implementation-defined.
double symmetric_unit(std::mt19937& rng) {
  return 2.0 * (static_cast<double>(rng()) / 4294967296.0) - 1.0;
}

MatX3 fibonacci_sphere(int m) {
  MatX3 points(m, 3);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < m; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / m;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double theta = golden * i;
    points.row(i) << r * std::cos(theta), r * std::sin(theta), z;
  }
  return points;
}

void add_jitter(MatX3& points, double amount, unsigned long seed) {
  if (amount == 0.0) return;
  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  for (Index i = 0; i < points.rows(); ++i)
    for (int c = 0; c < 3; ++c) points(i, c) += amount * symmetric_unit(rng);
}

}  // namespace

Shape synth_ellipsoid(int m, const Vec3& axes, unsigned long seed, double jitter) {
  if (m < 4) throw std::invalid_argument("synth_ellipsoid: need m >= 4");
  if (!(axes.minCoeff() > 0.0)) throw std::invalid_argument("synth_ellipsoid: axes must be > 0");
  MatX3 points = fibonacci_sphere(m);
  points.col(0) *= axes[0];
  points.col(1) *= axes[1];
  points.col(2) *= axes[2];
  add_jitter(points, jitter * axes.maxCoeff(), seed);
  TriangleList triangles = convex_hull_triangles(points);
  return make_shape(std::move(points), std::move(triangles));
}

Shape synth_sphere(int m, double radius, unsigned long seed, double jitter) {
  if (!(radius > 0.0)) throw std::invalid_argument("synth_sphere: radius must be > 0");
  return synth_ellipsoid(m, Vec3::Constant(radius), seed, jitter);
}

Shape synth_sheet(int m, double bend, unsigned long seed, double jitter) {
  if (m < 4) throw std::invalid_argument("synth_sheet: need m >= 4");
  // largest divisor pair nx * ny = m with nx <= ny
  int nx = static_cast<int>(std::floor(std::sqrt(static_cast<double>(m))));
  while (nx > 1 && m % nx != 0) --nx;
  const int ny = m / nx;
  if (nx < 2)
    throw std::invalid_argument("synth_sheet: m has no divisor pair >= 2 (use a composite m)");

  MatX3 points(m, 3);
  Eigen::Array<bool, Eigen::Dynamic, 1> boundary(m);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int i = iy * nx + ix;
      const double x = static_cast<double>(ix) / (nx - 1);
      const double y = static_cast<double>(iy) / (ny - 1);
      points.row(i) << x, y, bend * std::sin(M_PI * x) * std::sin(M_PI * y);
      boundary[i] = ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1;
    }
  }
  add_jitter(points, jitter, seed);
  TriangleList triangles(2 * (nx - 1) * (ny - 1), 3);
  Index t = 0;
  for (int iy = 0; iy + 1 < ny; ++iy) {
    for (int ix = 0; ix + 1 < nx; ++ix) {
      const int i00 = iy * nx + ix;
      const int i10 = i00 + 1;
      const int i01 = i00 + nx;
      const int i11 = i01 + 1;
      triangles.row(t++) << i00, i10, i11;
      triangles.row(t++) << i00, i11, i01;
    }
  }
  Shape shape = make_shape(std::move(points), std::move(triangles));
  shape.boundary = std::move(boundary);
  return shape;
}

}  // namespace diffeoflow
