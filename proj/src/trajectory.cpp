#include "diffeoflow/trajectory.hpp"

namespace diffeoflow {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

StateTrajectory rollout(const MatX3& x0, const ControlTrajectory& a,
                        const GaussianKernel& kernel, const TimeGrid& grid,
                        KernelAnchors anchors) {
  require(grid.n >= 1, "rollout: need n >= 1");
  require(a.blocks() == grid.n && a.points() == x0.rows(),
          "rollout: control dimensions mismatch");
  const double h = grid.h();
  StateTrajectory x(x0.rows(), grid.n + 1);
  x.block(0) = x0;
  MatX frozen;
  if (anchors == KernelAnchors::frozen_template) frozen = gram_matrix(kernel, x0);
  for (int j = 0; j < grid.n; ++j) {
    if (anchors == KernelAnchors::current_state) {
      const MatX gram = gram_matrix(kernel, x.block(j));
      x.block(j + 1) = x.block(j) + h * (gram * a.block(j));
    } else {
      x.block(j + 1) = x.block(j) + h * (frozen * a.block(j));
    }
  }
  return x;
}

StateTrajectory constraint_rhs(const MatX3& x0, const TimeGrid& grid) {
  StateTrajectory q(x0.rows(), grid.n + 1);
  q.block(0) = x0;
  return q;
}

StateTrajectory apply_Gx(const StateTrajectory& x) {
  StateTrajectory out(x.points(), x.blocks());
  out.block(0) = x.block(0);
  for (int j = 1; j < x.blocks(); ++j) out.block(j) = x.block(j) - x.block(j - 1);
  return out;
}

StateTrajectory apply_GxT(const StateTrajectory& v) {
  const int last = v.blocks() - 1;
  StateTrajectory out(v.points(), v.blocks());
  for (int j = 0; j < last; ++j) out.block(j) = v.block(j) - v.block(j + 1);
  out.block(last) = v.block(last);
  return out;
}

StateTrajectory apply_Ga(const GramOperator& frozen, const TimeGrid& grid,
                         const ControlTrajectory& a) {
  require(a.blocks() == grid.n && a.points() == frozen.size(),
          "apply_Ga: control dimensions mismatch");
  const double h = grid.h();
  StateTrajectory out(a.points(), grid.n + 1);
  for (int j = 0; j < grid.n; ++j)
    out.block(j + 1) = -h * (frozen.matrix() * a.block(j));
  return out;
}

ControlTrajectory apply_GaT(const GramOperator& frozen, const TimeGrid& grid,
                            const StateTrajectory& v) {
  require(v.blocks() == grid.n + 1 && v.points() == frozen.size(),
          "apply_GaT: state dimensions mismatch");
  const double h = grid.h();
  ControlTrajectory out(v.points(), grid.n);
  for (int j = 0; j < grid.n; ++j)
    out.block(j) = -h * (frozen.matrix() * v.block(j + 1));
  return out;
}

StateTrajectory apply_Ga(const GaussianKernel& kernel, const StateTrajectory& anchors,
                         const TimeGrid& grid, const ControlTrajectory& a) {
  require(a.blocks() == grid.n && anchors.blocks() == grid.n + 1 &&
              a.points() == anchors.points(),
          "apply_Ga: dimensions mismatch");
  const double h = grid.h();
  StateTrajectory out(a.points(), grid.n + 1);
  for (int j = 0; j < grid.n; ++j) {
    const MatX gram = gram_matrix(kernel, anchors.block(j));
    out.block(j + 1) = -h * (gram * a.block(j));
  }
  return out;
}

ControlTrajectory apply_GaT(const GaussianKernel& kernel, const StateTrajectory& anchors,
                            const TimeGrid& grid, const StateTrajectory& v) {
  require(v.blocks() == grid.n + 1 && anchors.blocks() == grid.n + 1 &&
              v.points() == anchors.points(),
          "apply_GaT: dimensions mismatch");
  const double h = grid.h();
  ControlTrajectory out(v.points(), grid.n);
  for (int j = 0; j < grid.n; ++j) {
    const MatX gram = gram_matrix(kernel, anchors.block(j));
    out.block(j) = -h * (gram * v.block(j + 1));
  }
  return out;
}

MatX3 observe_terminal(const StateTrajectory& x) { return x.block(x.blocks() - 1); }

}  // namespace diffeoflow
