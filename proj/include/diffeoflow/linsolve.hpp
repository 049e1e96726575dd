#pragma once

#include <functional>
#include <span>

#include "diffeoflow/types.hpp"

namespace diffeoflow {

using LinearOperator = std::function<VecX(const VecX&)>;

struct PcgConfig {
  double rel_tolerance = 1e-4;
  int max_iterations = 100;
  LinearOperator preconditioner;  // apply-inverse callback; empty = identity
};

enum class PcgStop { converged, max_iter, negative_curvature };

struct PcgOutcome {
  VecX solution;
  int iterations = 0;
  double rel_residual = 0.0;  // |b - Ax| / |b|
  PcgStop reason = PcgStop::converged;
};

/// Preconditioned conjugate gradients with a negative-curvature guard:
/// if a search direction p has p^T A p <= 0, the current iterate is
/// returned when at least one step was taken, otherwise the
/// preconditioned steepest-descent direction. b = 0 short-circuits to
/// x = 0. Throws std::runtime_error on non-finite values.
PcgOutcome pcg(const LinearOperator& applyA, const VecX& b, const PcgConfig& cfg);

/// Lower-triangular Cholesky factor L with L L^T = A.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;
  explicit CholeskyFactor(MatX lower) : lower_(std::move(lower)) {}

  const MatX& matrixL() const { return lower_; }
  Index size() const { return lower_.rows(); }

  VecX solve(const VecX& rhs) const;
  MatX solve(const MatX& rhs) const;  // columnwise
  void solve_in_place(Eigen::Ref<MatX> rhs) const;

 private:
  MatX lower_;
};

/// Factors a small dense SPD matrix. Requires symmetry within 1e-10;
/// throws std::runtime_error naming the pivot index when a non-positive
/// pivot is met ("not SPD").
CholeskyFactor cholesky_spd(const MatX& matrix);

inline VecX solve_with_factor(const CholeskyFactor& factor, const VecX& rhs) {
  return factor.solve(rhs);
}

/// One diagonal block of a block-diagonal SPD matrix: either a factored
/// block (applied to each contiguous chunk of factor->size() entries of
/// its segment) or a scalar multiple of the identity.
struct DiagBlockRef {
  const CholeskyFactor* factor = nullptr;  // nullptr = scalar block
  double scalar = 1.0;
  Index dim = 0;  // segment length; factored blocks need dim % size == 0
};

/// Applies the inverse of diag(blocks...) to a stacked vector.
VecX block_diag_apply_inverse(std::span<const DiagBlockRef> blocks, const VecX& v);

}  // namespace diffeoflow
