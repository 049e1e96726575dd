#include "diffeoflow/shape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace diffeoflow {

Shape make_shape(MatX3 points) {
  Shape shape;
  shape.points = std::move(points);
  const Index m = shape.points.rows();
  if (m >= 1) shape.weights = VecX::Constant(m, 1.0 / static_cast<double>(m));
  validate(shape);
  return shape;
}

Shape make_shape(MatX3 points, TriangleList triangles) {
  Shape shape = make_shape(std::move(points));
  shape.triangles = std::move(triangles);
  validate(shape);
  return shape;
}

void validate(const Shape& shape) {
  const Index m = shape.points.rows();
  if (m < 1) throw std::invalid_argument("shape: needs at least one point");
  if (!shape.points.allFinite())
    throw std::invalid_argument("shape: non-finite point coordinates");
  for (Index t = 0; t < shape.triangles.rows(); ++t) {
    for (int v = 0; v < 3; ++v) {
      const int idx = shape.triangles(t, v);
      if (idx < 0 || idx >= m)
        throw std::invalid_argument("shape: triangle " + std::to_string(t) +
                                    " references point " + std::to_string(idx) +
                                    " outside [0, " + std::to_string(m) + ")");
    }
  }
  if (shape.boundary.size() > 0 && shape.boundary.size() != m)
    throw std::invalid_argument("shape: boundary flag count mismatch");
  if (shape.leaflet.size() > 0 && shape.leaflet.size() != m)
    throw std::invalid_argument("shape: leaflet label count mismatch");
  if (shape.weights.size() != m)
    throw std::invalid_argument("shape: weight count mismatch");
  if ((shape.weights.array() < 0.0).any())
    throw std::invalid_argument("shape: negative weight");
  const double sum = shape.weights.sum();
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("shape: weights sum to " + std::to_string(sum) +
                                ", expected 1");
}

}  // namespace diffeoflow
