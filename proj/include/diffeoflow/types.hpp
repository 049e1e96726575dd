#pragma once

#include <Eigen/Dense>

namespace diffeoflow {

using Index = Eigen::Index;
using Vec3 = Eigen::Vector3d;
using RowVec3 = Eigen::RowVector3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Point sets are stored with one point per row; a column holds one
// coordinate for all points, so vec(points) is coordinate-major.
using MatX3 = Eigen::MatrixX3d;
using TriangleList = Eigen::Matrix<int, Eigen::Dynamic, 3>;

}  // namespace diffeoflow
