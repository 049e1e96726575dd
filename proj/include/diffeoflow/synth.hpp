#pragma once

#include "diffeoflow/shape.hpp"

namespace diffeoflow {

/// Triangulation of the convex hull of a point set in general position
/// (incremental algorithm, outward-oriented faces). All points must end
/// up on the hull for the result to be a valid mesh over all m points,
/// which holds for the convex samplers below.
TriangleList convex_hull_triangles(const MatX3& points);

/// Fibonacci-sphere sampling with convex-hull triangulation. jitter
/// perturbs each point by up to jitter*radius per coordinate,
/// deterministically for a given seed.
Shape synth_sphere(int m, double radius, unsigned long seed = 0, double jitter = 0.0);
Shape synth_ellipsoid(int m, const Vec3& axes, unsigned long seed = 0,
                      double jitter = 0.0);

/// Bent-sheet "valve-like" surface: a regular grid on [0,1]^2 with
/// height bend*sin(pi x)*sin(pi y), fan-triangulated cells, and
/// boundary flags on the rim. The grid uses the largest divisor pair of
/// m, so m should have a factor near sqrt(m).
Shape synth_sheet(int m, double bend, unsigned long seed = 0, double jitter = 0.0);

}  // namespace diffeoflow
