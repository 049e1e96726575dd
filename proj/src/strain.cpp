#include "diffeoflow/strain.hpp"

#include <cmath>
#include <stdexcept>

namespace diffeoflow {

namespace {

double triangle_area(const MatX3& pts, int a, int b, int c) {
  const Vec3 u = (pts.row(b) - pts.row(a)).transpose();
  const Vec3 v = (pts.row(c) - pts.row(a)).transpose();
  return 0.5 * u.cross(v).norm();
}

}  // namespace

StrainField strain_field(const Shape& tmpl, const MatX3& deformed_points) {
  if (!tmpl.has_mesh()) throw std::invalid_argument("strain_field: template has no mesh");
  if (deformed_points.rows() != tmpl.size())
    throw std::invalid_argument("strain_field: deformed point count mismatch");

  const Index ntri = tmpl.triangles.rows();
  const Index m = tmpl.size();
  const double scale = (tmpl.points.colwise().maxCoeff() - tmpl.points.colwise().minCoeff()).norm();
  const double area_floor = 1e-14 * scale * scale;

  StrainField field;
  field.per_triangle_q.resize(ntri);
  field.degenerate.assign(ntri, false);
  VecX tmpl_area(ntri);
  for (Index t = 0; t < ntri; ++t) {
    const int a = tmpl.triangles(t, 0), b = tmpl.triangles(t, 1), c = tmpl.triangles(t, 2);
    tmpl_area[t] = triangle_area(tmpl.points, a, b, c);
    if (tmpl_area[t] < area_floor) {
      field.per_triangle_q[t] = 1.0;
      field.degenerate[t] = true;
    } else {
      field.per_triangle_q[t] =
          std::sqrt(triangle_area(deformed_points, a, b, c) / tmpl_area[t]);
    }
  }

  // template-area-weighted mean of |q - 1| over incident triangles
  field.per_vertex_p = VecX::Zero(m);
  VecX incident_area = VecX::Zero(m);
  for (Index t = 0; t < ntri; ++t) {
    const double p = std::abs(field.per_triangle_q[t] - 1.0);
    for (int v = 0; v < 3; ++v) {
      const int idx = tmpl.triangles(t, v);
      field.per_vertex_p[idx] += tmpl_area[t] * p;
      incident_area[idx] += tmpl_area[t];
    }
  }
  for (Index i = 0; i < m; ++i)
    if (incident_area[i] > 0.0) field.per_vertex_p[i] /= incident_area[i];
  return field;
}

}  // namespace diffeoflow
