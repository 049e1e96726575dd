#include "diffeoflow/kernels.hpp"

#include <iostream>
#include <stdexcept>

#include "diffeoflow/geometry.hpp"

namespace diffeoflow {

MatX gram_matrix(const GaussianKernel& kernel, const MatX3& points) {
  const Index m = points.rows();
  const double inv2s2 = 0.5 / (kernel.sigma * kernel.sigma);
  const double scale = kernel.self_value();
  MatX gram(m, m);
  for (Index l = 0; l < m; ++l) {
    gram(l, l) = scale;
    for (Index k = l + 1; k < m; ++k) {
      const double d2 = (points.row(l) - points.row(k)).squaredNorm();
      const double value = scale * std::exp(-d2 * inv2s2);
      gram(l, k) = value;
      gram(k, l) = value;
    }
  }
  return gram;
}

MatX cross_gram(const GaussianKernel& kernel, const MatX3& a, const MatX3& b) {
  const double inv2s2 = 0.5 / (kernel.sigma * kernel.sigma);
  const double scale = kernel.self_value();
  MatX gram(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j)
      gram(i, j) = scale * std::exp(-(a.row(i) - b.row(j)).squaredNorm() * inv2s2);
  return gram;
}

GramOperator::GramOperator(MatX3 anchors, GaussianKernel kernel)
    : anchors_(std::move(anchors)), kernel_(kernel) {
  if (kernel_.sigma <= 0.0) throw std::invalid_argument("GramOperator: sigma must be > 0");
  if (anchors_.rows() > 20000)
    throw std::invalid_argument("GramOperator: dense Gram cache capped at m <= 20000");
  gram_ = gram_matrix(kernel_, anchors_);
}

MatX3 GramOperator::apply(const MatX3& coeffs) const {
  if (coeffs.rows() != anchors_.rows())
    throw std::invalid_argument("GramOperator: coefficient count mismatch");
  return gram_ * coeffs;
}

MatX3 gram_matvec(const GramOperator& op, const MatX3& coeffs) { return op.apply(coeffs); }

double sigma_v_policy(const Shape& tmpl, double tau_v) {
  if (!(tau_v > 0.0)) throw std::invalid_argument("sigma_v_policy: tau_v must be > 0");
  return tau_v * std::sqrt(0.5) * mean_edge_length(tmpl);
}

double sigma_s_policy(const Shape& tmpl, const Shape& target, double tau_s) {
  if (!(tau_s > 0.0)) throw std::invalid_argument("sigma_s_policy: tau_s must be > 0");
  if (tau_s < 0.75 || tau_s > 6.0)
    std::cerr << "warning: tau_s = " << tau_s << " outside the tested range [3/4, 6]\n";
  const double hbar1 = mean_edge_length(target);
  const double dist = hausdorff(tmpl, target, 1.0).value;
  return std::max(hbar1, tau_s * dist / 2.0);
}

}  // namespace diffeoflow
