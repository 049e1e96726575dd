#pragma once

#include <cmath>

#include "diffeoflow/shape.hpp"
#include "diffeoflow/types.hpp"

namespace diffeoflow {

/// Gaussian kernel exp(-|u-v|^2 / (2 sigma^2)), optionally carrying the
/// (sqrt(2 pi) sigma)^-3 prefactor. The velocity kernel is normalized;
/// the shape-distance kernel is not (the dropped constant is absorbable
/// into the distance weight alpha).
struct GaussianKernel {
  double sigma = 1.0;
  bool normalized = true;

  double self_value() const {
    return normalized ? std::pow(2.0 * M_PI, -1.5) / (sigma * sigma * sigma) : 1.0;
  }

  template <typename DerivedU, typename DerivedV>
  double operator()(const Eigen::MatrixBase<DerivedU>& u,
                    const Eigen::MatrixBase<DerivedV>& v) const {
    const double d2 = (u - v).squaredNorm();
    return self_value() * std::exp(-0.5 * d2 / (sigma * sigma));
  }
};

/// Dense m x m Gram matrix K with K(l,k) = ker(p_l, p_k).
MatX gram_matrix(const GaussianKernel& kernel, const MatX3& points);

/// Gram matrix of kernel evaluations between two point sets (m_a x m_b).
MatX cross_gram(const GaussianKernel& kernel, const MatX3& a, const MatX3& b);

/// Kernel sums anchored at a fixed point set, with the dense Gram matrix
/// assembled once and cached. Immutable after construction; the dense
/// cache limits usable sizes to m <= 20000.
class GramOperator {
 public:
  GramOperator(MatX3 anchors, GaussianKernel kernel);

  const MatX3& anchors() const { return anchors_; }
  const GaussianKernel& kernel() const { return kernel_; }
  const MatX& matrix() const { return gram_; }
  Index size() const { return anchors_.rows(); }

  /// out_l = sum_k ker(x_k, x_l) coeffs_k, i.e. K * coeffs.
  MatX3 apply(const MatX3& coeffs) const;

 private:
  MatX3 anchors_;
  GaussianKernel kernel_;
  MatX gram_;
};

MatX3 gram_matvec(const GramOperator& op, const MatX3& coeffs);

/// Velocity bandwidth policy: sigma_v = tau_v * 2^(-1/2) * hbar_0 with
/// hbar_0 the mean edge length of the template.
double sigma_v_policy(const Shape& tmpl, double tau_v);

/// Distance bandwidth policy: sigma_s = max(hbar_1, tau_s * dist_H / 2)
/// with dist_H the uncensored Hausdorff distance between template and
/// target and hbar_1 the target mean edge length. Warns on stderr when
/// tau_s lies outside [3/4, 6].
double sigma_s_policy(const Shape& tmpl, const Shape& target, double tau_s);

}  // namespace diffeoflow
