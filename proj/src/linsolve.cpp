#include "diffeoflow/linsolve.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace diffeoflow {

PcgOutcome pcg(const LinearOperator& applyA, const VecX& b, const PcgConfig& cfg) {
  if (!(cfg.rel_tolerance > 0.0) || cfg.max_iterations < 1)
    throw std::invalid_argument("pcg: bad configuration");
  PcgOutcome out;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.solution = VecX::Zero(b.size());
    return out;
  }

  const auto precond = [&](const VecX& r) { return cfg.preconditioner ? cfg.preconditioner(r) : r; };

  VecX x = VecX::Zero(b.size());
  VecX r = b;
  VecX z = precond(r);
  VecX p = z;
  double rz = r.dot(z);
  int it = 0;
  while (it < cfg.max_iterations) {
    const VecX Ap = applyA(p);
    const double pAp = p.dot(Ap);
    if (!std::isfinite(pAp) || !Ap.allFinite())
      throw std::runtime_error("pcg: numerical breakdown at iteration " + std::to_string(it));
    if (pAp <= 0.0) {
      // negative curvature: keep the progress made, or fall back to the
      // preconditioned steepest-descent direction on the first pass
      out.solution = (it == 0) ? z : x;
      out.iterations = it;
      out.rel_residual = (b - applyA(out.solution)).norm() / bnorm;
      out.reason = PcgStop::negative_curvature;
      return out;
    }
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    ++it;
    if (r.norm() / bnorm <= cfg.rel_tolerance) {
      // recurrence residual can drift; confirm with the true residual
      r = b - applyA(x);
      if (r.norm() / bnorm <= cfg.rel_tolerance) {
        out.solution = std::move(x);
        out.iterations = it;
        out.rel_residual = r.norm() / bnorm;
        out.reason = PcgStop::converged;
        return out;
      }
      z = precond(r);
      p = z;
      rz = r.dot(z);
      continue;
    }
    z = precond(r);
    const double rz_next = r.dot(z);
    if (!std::isfinite(rz_next))
      throw std::runtime_error("pcg: numerical breakdown at iteration " + std::to_string(it));
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  out.solution = std::move(x);
  out.iterations = it;
  out.rel_residual = (b - applyA(out.solution)).norm() / bnorm;
  out.reason = PcgStop::max_iter;
  return out;
}

VecX CholeskyFactor::solve(const VecX& rhs) const {
  VecX y = lower_.triangularView<Eigen::Lower>().solve(rhs);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
  return y;
}

MatX CholeskyFactor::solve(const MatX& rhs) const {
  MatX y = lower_.triangularView<Eigen::Lower>().solve(rhs);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
  return y;
}

void CholeskyFactor::solve_in_place(Eigen::Ref<MatX> rhs) const {
  lower_.template triangularView<Eigen::Lower>().solveInPlace(rhs);
  lower_.transpose().template triangularView<Eigen::Upper>().solveInPlace(rhs);
}

CholeskyFactor cholesky_spd(const MatX& matrix) {
  const Index n = matrix.rows();
  if (matrix.cols() != n) throw std::invalid_argument("cholesky_spd: matrix not square");
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  if (((matrix - matrix.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * scale)
    throw std::invalid_argument("cholesky_spd: matrix not symmetric within 1e-10");

  MatX lower = MatX::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    const double diag = matrix(j, j) - lower.row(j).head(j).squaredNorm();
    if (!(diag > 0.0))
      throw std::runtime_error("cholesky_spd: not SPD (non-positive pivot at index " +
                               std::to_string(j) + ")");
    const double ljj = std::sqrt(diag);
    lower(j, j) = ljj;
    const Index rest = n - j - 1;
    if (rest > 0) {
      lower.col(j).tail(rest) =
          (matrix.col(j).tail(rest) -
           lower.bottomLeftCorner(rest, j) * lower.row(j).head(j).transpose()) /
          ljj;
    }
  }
  return CholeskyFactor(std::move(lower));
}

VecX block_diag_apply_inverse(std::span<const DiagBlockRef> blocks, const VecX& v) {
  Index total = 0;
  for (const auto& block : blocks) total += block.dim;
  if (total != v.size())
    throw std::invalid_argument("block_diag_apply_inverse: block sizes do not cover the vector");
  VecX out(v.size());
  Index offset = 0;
  for (const auto& block : blocks) {
    if (block.factor == nullptr) {
      if (block.scalar == 0.0)
        throw std::invalid_argument("block_diag_apply_inverse: zero scalar block");
      out.segment(offset, block.dim) = v.segment(offset, block.dim) / block.scalar;
    } else {
      const Index size = block.factor->size();
      if (size == 0 || block.dim % size != 0)
        throw std::invalid_argument("block_diag_apply_inverse: segment not a multiple of the factor size");
      Eigen::Map<const MatX> rhs(v.data() + offset, size, block.dim / size);
      Eigen::Map<MatX> sol(out.data() + offset, size, block.dim / size);
      sol = rhs;
      block.factor->solve_in_place(sol);
    }
    offset += block.dim;
  }
  return out;
}

}  // namespace diffeoflow
