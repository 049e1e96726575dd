#pragma once

#include <span>
#include <utility>
#include <vector>

#include "diffeoflow/shape.hpp"

namespace diffeoflow {

using Edge = std::pair<int, int>;  // undirected, stored with first < second

/// Censored Hausdorff distance between two point sets. Each directed
/// distance is the nearest-rank percentile of the per-point
/// nearest-neighbor distances; percentile 1 gives the exact Hausdorff
/// distance.
struct HausdorffReport {
  double value = 0.0;        // max(directed_ab, directed_ba)
  double percentile = 1.0;   // in (0, 1]
  double directed_ab = 0.0;
  double directed_ba = 0.0;
};

HausdorffReport hausdorff(const Shape& a, const Shape& b, double percentile = 0.95);
HausdorffReport hausdorff(const MatX3& a, const MatX3& b, double percentile = 0.95);

/// Unique undirected edges of the triangle mesh, sorted lexicographically.
std::vector<Edge> mesh_edges(const Shape& shape);

/// Symmetric k-nearest-neighbor edge graph: an edge is present if either
/// endpoint lists the other among its k nearest points. Ties are broken
/// by lower point index. Requires m > k >= 1.
std::vector<Edge> knn_edge_graph(const Shape& shape, int k);

enum class EdgeFallback {
  none,  // mesh required, "no connectivity" error otherwise
  knn,   // fall back to knn_edge_graph with k = min(6, m-1)
};

/// Arithmetic mean of the Euclidean lengths of the given edges.
double mean_edge_length(const Shape& shape, std::span<const Edge> edges);

/// Mean edge length of the mesh, or of the k-NN fallback graph when the
/// shape has no mesh and the fallback is permitted.
double mean_edge_length(const Shape& shape, EdgeFallback fallback = EdgeFallback::knn);

}  // namespace diffeoflow
