#include "diffeoflow/objective.hpp"

#include <stdexcept>

namespace diffeoflow {

double kinetic_energy(const ControlTrajectory& a, const KineticEnergyOperator& op) {
  if (op.gram == nullptr) throw std::invalid_argument("kinetic_energy: missing Gram operator");
  if (a.blocks() != op.grid.n || a.points() != op.gram->size())
    throw std::invalid_argument("kinetic_energy: control dimensions mismatch");
  const MatX& gram = op.gram->matrix();
  double quad = 0.0;
  for (int j = 0; j < a.blocks(); ++j)
    quad += (a.block(j).array() * (gram * a.block(j)).array()).sum();
  return op.grid.h() * quad;
}

namespace {

VecX effective_weights(const Shape& shape, double boundary_scale) {
  VecX weights = shape.weights;
  if (shape.has_boundary() && boundary_scale != 1.0)
    weights = (shape.boundary).select(boundary_scale * weights.array(), weights.array());
  return weights;
}

// phi(A, B) = sum_{k,l} wa_k wb_l exp(-|A_k - B_l|^2 / (2 sigma^2))
double phi(const MatX3& a, const VecX& wa, const MatX3& b, const VecX& wb, double sigma) {
  const double inv2s2 = 0.5 / (sigma * sigma);
  double total = 0.0;
  for (Index k = 0; k < a.rows(); ++k) {
    const MatX3 d = (-b).rowwise() + a.row(k);
    total += wa[k] * (d.rowwise().squaredNorm() * -inv2s2).array().exp().matrix().dot(wb);
  }
  return total;
}

}  // namespace

KernelDistance make_kernel_distance(const Shape& target, const Shape& tmpl,
                                    double sigma_s, double alpha, double boundary_scale,
                                    DiracMass mass) {
  if (!(sigma_s > 0.0)) throw std::invalid_argument("make_kernel_distance: sigma_s must be > 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("make_kernel_distance: alpha must be > 0");
  KernelDistance kd;
  kd.target = target.points;
  kd.target_w = effective_weights(target, boundary_scale);
  kd.source_w = effective_weights(tmpl, boundary_scale);
  if (mass == DiracMass::counting) {
    kd.target_w *= static_cast<double>(target.size());
    kd.source_w *= static_cast<double>(tmpl.size());
  }
  kd.sigma_s = sigma_s;
  kd.alpha = alpha;
  kd.const_term = phi(kd.target, kd.target_w, kd.target, kd.target_w, sigma_s);
  return kd;
}

double kernel_distance(const MatX3& z, const KernelDistance& kd) {
  if (z.rows() != kd.source_w.size())
    throw std::invalid_argument("kernel_distance: point count mismatch");
  const double zz = phi(z, kd.source_w, z, kd.source_w, kd.sigma_s);
  const double zx = phi(z, kd.source_w, kd.target, kd.target_w, kd.sigma_s);
  return 0.5 * kd.alpha * (zz - 2.0 * zx + kd.const_term);
}

MatX3 distance_gradient(const MatX3& z, const KernelDistance& kd) {
  const Index m0 = z.rows();
  if (m0 != kd.source_w.size())
    throw std::invalid_argument("distance_gradient: point count mismatch");
  const double s2 = kd.sigma_s * kd.sigma_s;
  const double inv2s2 = 0.5 / s2;
  MatX3 grad(m0, 3);
  MatX3 d;
  VecX e;
  for (Index k = 0; k < m0; ++k) {
    // cross term: d_l = z_k - x1_l
    d = (-kd.target).rowwise() + z.row(k);
    e = kd.target_w.array() * (d.rowwise().squaredNorm() * -inv2s2).array().exp();
    RowVec3 acc = e.transpose() * d;
    // self term: d_l = z_k - z_l (the l = k entry vanishes)
    d = (-z).rowwise() + z.row(k);
    e = kd.source_w.array() * (d.rowwise().squaredNorm() * -inv2s2).array().exp();
    acc -= e.transpose() * d;
    grad.row(k) = (kd.alpha * kd.source_w[k] / s2) * acc;
  }
  return grad;
}

MatX3 distance_hessian_matvec(const MatX3& z, const MatX3& v, const KernelDistance& kd) {
  const Index m0 = z.rows();
  if (m0 != kd.source_w.size() || v.rows() != m0)
    throw std::invalid_argument("distance_hessian_matvec: dimensions mismatch");
  const double s2 = kd.sigma_s * kd.sigma_s;
  const double inv2s2 = 0.5 / s2;
  MatX3 out(m0, 3);
  MatX3 d, dv;
  VecX e, proj;
  for (Index k = 0; k < m0; ++k) {
    // cross block: sum_l q_l e (v_k - (d . v_k) d / s2)
    d = (-kd.target).rowwise() + z.row(k);
    e = kd.target_w.array() * (d.rowwise().squaredNorm() * -inv2s2).array().exp();
    proj = d * v.row(k).transpose();
    RowVec3 acc = e.sum() * v.row(k) - (e.cwiseProduct(proj).transpose() * d) / s2;
    // self block: sum_l p_l e ((d . (v_k - v_l)) d / s2 - (v_k - v_l))
    d = (-z).rowwise() + z.row(k);
    dv = (-v).rowwise() + v.row(k);
    e = kd.source_w.array() * (d.rowwise().squaredNorm() * -inv2s2).array().exp();
    proj = (d.array() * dv.array()).rowwise().sum();
    acc += (e.cwiseProduct(proj).transpose() * d) / s2 - e.transpose() * dv;
    out.row(k) = (kd.alpha * kd.source_w[k] / s2) * acc;
  }
  return out;
}

}  // namespace diffeoflow
