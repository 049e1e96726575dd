#pragma once

#include <Eigen/Dense>

#include "diffeoflow/types.hpp"

namespace diffeoflow {

/// A discretized surface: m points in R^3, an optional triangle mesh,
/// optional per-point annotations, and per-point measure weights that
/// sum to one (uniform 1/m unless stated otherwise).
struct Shape {
  MatX3 points;                                  // m x 3
  TriangleList triangles;                        // T x 3, empty when no mesh
  Eigen::Array<bool, Eigen::Dynamic, 1> boundary;  // per-point flag, empty when absent
  Eigen::ArrayXi leaflet;                        // per-point label, empty when absent
  VecX weights;                                  // m, nonnegative, sums to 1

  Index size() const { return points.rows(); }
  bool has_mesh() const { return triangles.rows() > 0; }
  bool has_boundary() const { return boundary.size() > 0; }
  bool has_leaflet() const { return leaflet.size() > 0; }
};

/// Builds a shape with uniform weights. Throws std::invalid_argument on
/// invariant violations (empty point set, bad triangle indices, ...).
Shape make_shape(MatX3 points);
Shape make_shape(MatX3 points, TriangleList triangles);

/// Checks all Shape invariants; throws std::invalid_argument with a
/// description of the first violation found.
void validate(const Shape& shape);

}  // namespace diffeoflow
