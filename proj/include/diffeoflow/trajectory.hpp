#pragma once

#include <stdexcept>

#include "diffeoflow/kernels.hpp"
#include "diffeoflow/types.hpp"

namespace diffeoflow {

/// Uniform grid on [0,1] with n cells of size h = 1/(n+1) and nodes
/// t^j = (j-1)h, j = 1..n+1 (the paper's convention; the terminal node
/// sits at n/(n+1), not at 1).
struct TimeGrid {
  int n = 1;

  double h() const { return 1.0 / (n + 1); }
  double time(int j) const { return (j - 1) * h(); }  // j is 1-based
};

/// Contiguous storage for a time-blocked vector: `blocks` blocks of m
/// points in R^3. Each block is coordinate-major (vec of an m x 3
/// matrix), so applying I_3 (x) K to a block is K * block.
class BlockVec {
 public:
  BlockVec() = default;
  BlockVec(Index points, int blocks)
      : m_(points), blocks_(blocks), vec_(VecX::Zero(3 * points * blocks)) {}

  Index points() const { return m_; }
  int blocks() const { return blocks_; }

  Eigen::Map<MatX3> block(int j) {
    return Eigen::Map<MatX3>(vec_.data() + static_cast<Index>(j) * 3 * m_, m_, 3);
  }
  Eigen::Map<const MatX3> block(int j) const {
    return Eigen::Map<const MatX3>(vec_.data() + static_cast<Index>(j) * 3 * m_, m_, 3);
  }

  VecX& vec() { return vec_; }
  const VecX& vec() const { return vec_; }

  bool conforms(const BlockVec& other) const {
    return m_ == other.m_ && blocks_ == other.blocks_;
  }

 private:
  Index m_ = 0;
  int blocks_ = 0;
  VecX vec_;
};

/// n+1 time blocks x(t^1)..x(t^{n+1}).
using StateTrajectory = BlockVec;

/// n time blocks a(t^1)..a(t^n); the control at t^{n+1} never enters the
/// Euler recursion or the left-Riemann kinetic energy and is not stored.
using ControlTrajectory = BlockVec;

enum class KernelAnchors {
  current_state,    // Gram re-evaluated at x(t^j) each step (faithful)
  frozen_template,  // Gram fixed at x_0 throughout (linear constraint)
};

/// Forward-Euler integration x(t^{j+1}) = x(t^j) + h K[anchor] a(t^j).
StateTrajectory rollout(const MatX3& x0, const ControlTrajectory& a,
                        const GaussianKernel& kernel, const TimeGrid& grid,
                        KernelAnchors anchors = KernelAnchors::current_state);

/// Right-hand side q = (x_0; 0; ...; 0) of the Euler constraint.
StateTrajectory constraint_rhs(const MatX3& x0, const TimeGrid& grid);

/// Euler constraint operators and their adjoints. G^x is lower block
/// bidiagonal (row 1 = x(t^1), row j+1 = x(t^{j+1}) - x(t^j)); G^a has
/// -h B^j at block (j+1, j) with B^j = I_3 (x) K at the anchor states.
StateTrajectory apply_Gx(const StateTrajectory& x);
StateTrajectory apply_GxT(const StateTrajectory& v);

StateTrajectory apply_Ga(const GramOperator& frozen, const TimeGrid& grid,
                         const ControlTrajectory& a);
ControlTrajectory apply_GaT(const GramOperator& frozen, const TimeGrid& grid,
                            const StateTrajectory& v);

/// Anchor-state variants: B^j is evaluated at anchors.block(j-1).
StateTrajectory apply_Ga(const GaussianKernel& kernel, const StateTrajectory& anchors,
                         const TimeGrid& grid, const ControlTrajectory& a);
ControlTrajectory apply_GaT(const GaussianKernel& kernel, const StateTrajectory& anchors,
                            const TimeGrid& grid, const StateTrajectory& v);

/// Observation operator Q = (0 ... 0 I): the terminal block.
MatX3 observe_terminal(const StateTrajectory& x);

}  // namespace diffeoflow
