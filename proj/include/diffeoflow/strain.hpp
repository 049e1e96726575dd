#pragma once

#include <vector>

#include "diffeoflow/shape.hpp"

namespace diffeoflow {

/// Isotropic strain of a deformation sampled on the template mesh:
/// per triangle q_iso = sqrt(area(deformed T) / area(template T)), and
/// per vertex the template-area-weighted mean of |q_iso - 1| over
/// incident triangles.
struct StrainField {
  VecX per_triangle_q;
  VecX per_vertex_p;
  std::vector<bool> degenerate;  // template triangles below the area floor
};

StrainField strain_field(const Shape& tmpl, const MatX3& deformed_points);

}  // namespace diffeoflow
