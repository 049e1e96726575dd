#include "diffeoflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace diffeoflow {

namespace {

// Nearest-rank percentile (1-based index ceil(p*m)) of the per-point
// nearest-neighbor distances from a to b.
double directed_percentile(const MatX3& a, const MatX3& b, double percentile) {
  const Index ma = a.rows();
  const Index mb = b.rows();
  VecX nearest(ma);
  for (Index i = 0; i < ma; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < mb; ++j) {
      const double d2 = (a.row(i) - b.row(j)).squaredNorm();
      best = std::min(best, d2);
    }
    nearest[i] = std::sqrt(best);
  }
  std::sort(nearest.data(), nearest.data() + ma);
  Index rank = static_cast<Index>(std::ceil(percentile * static_cast<double>(ma)));
  rank = std::clamp(rank, Index{1}, ma);
  return nearest[rank - 1];
}

}  // namespace

HausdorffReport hausdorff(const MatX3& a, const MatX3& b, double percentile) {
  if (a.rows() < 1 || b.rows() < 1)
    throw std::invalid_argument("hausdorff: empty point set");
  if (!(percentile > 0.0 && percentile <= 1.0))
    throw std::invalid_argument("hausdorff: percentile must lie in (0, 1]");
  HausdorffReport report;
  report.percentile = percentile;
  report.directed_ab = directed_percentile(a, b, percentile);
  report.directed_ba = directed_percentile(b, a, percentile);
  report.value = std::max(report.directed_ab, report.directed_ba);
  return report;
}

HausdorffReport hausdorff(const Shape& a, const Shape& b, double percentile) {
  return hausdorff(a.points, b.points, percentile);
}

std::vector<Edge> mesh_edges(const Shape& shape) {
  std::set<Edge> edges;
  for (Index t = 0; t < shape.triangles.rows(); ++t) {
    for (int v = 0; v < 3; ++v) {
      int i = shape.triangles(t, v);
      int j = shape.triangles(t, (v + 1) % 3);
      if (i == j) continue;
      edges.emplace(std::min(i, j), std::max(i, j));
    }
  }
  return {edges.begin(), edges.end()};
}

std::vector<Edge> knn_edge_graph(const Shape& shape, int k) {
  const Index m = shape.size();
  if (k < 1 || static_cast<Index>(k) >= m)
    throw std::invalid_argument("knn_edge_graph: need m > k >= 1");
  std::set<Edge> edges;
  std::vector<std::pair<double, int>> candidates;
  candidates.reserve(m - 1);
  for (Index i = 0; i < m; ++i) {
    candidates.clear();
    for (Index j = 0; j < m; ++j) {
      if (j == i) continue;
      candidates.emplace_back((shape.points.row(i) - shape.points.row(j)).squaredNorm(),
                              static_cast<int>(j));
    }
    // ties broken by lower index
    std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end());
    for (int r = 0; r < k; ++r) {
      const int j = candidates[r].second;
      edges.emplace(std::min<int>(i, j), std::max<int>(i, j));
    }
  }
  return {edges.begin(), edges.end()};
}

double mean_edge_length(const Shape& shape, std::span<const Edge> edges) {
  if (edges.empty()) throw std::runtime_error("mean_edge_length: no connectivity");
  double total = 0.0;
  for (const auto& [i, j] : edges)
    total += (shape.points.row(i) - shape.points.row(j)).norm();
  return total / static_cast<double>(edges.size());
}

double mean_edge_length(const Shape& shape, EdgeFallback fallback) {
  if (shape.has_mesh()) {
    const auto edges = mesh_edges(shape);
    return mean_edge_length(shape, edges);
  }
  if (fallback == EdgeFallback::none)
    throw std::runtime_error("mean_edge_length: no connectivity (shape has no mesh)");
  const int k = static_cast<int>(std::min<Index>(6, shape.size() - 1));
  if (k < 1) throw std::runtime_error("mean_edge_length: no connectivity (single point)");
  const auto edges = knn_edge_graph(shape, k);
  return mean_edge_length(shape, edges);
}

}  // namespace diffeoflow
