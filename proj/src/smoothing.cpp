#include "uqpe/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace uqpe {

double bandwidth(const BandwidthRule& rule, const Eigen::Ref<const Vector>& y) {
  const Index n = y.size();
  if (n < 2) raise(ErrorCode::EmptyInput, "bandwidth: need at least two observations");
  if (!(rule.constant > 0.0)) raise(ErrorCode::InvalidArgument, "bandwidth: constant must be positive");
  // Named rates 1/4, 1/5, 1/6 are always accepted (the 1/6 sweep sits just
  // below the second-order cutoff); custom rates must satisfy the
  // second-order admissible range [1/5, 1/2).
  const bool named = std::abs(rule.exponent - 0.25) < 1e-12 || std::abs(rule.exponent - 0.2) < 1e-12 ||
                     std::abs(rule.exponent - 1.0 / 6.0) < 1e-12;
  if (!named && !(rule.exponent >= 0.2 && rule.exponent < 0.5))
    raise(ErrorCode::InvalidArgument,
          "bandwidth: exponent must be 1/4, 1/5, 1/6 or lie in [1/5, 1/2)");
  const double mean = y.mean();
  const double sd = std::sqrt((y.array() - mean).square().sum() / static_cast<double>(n - 1));
  if (sd <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mean)))
    raise(ErrorCode::DegenerateSample, "bandwidth: sample standard deviation is zero");
  return rule.constant * sd * std::pow(static_cast<double>(n), -rule.exponent);
}

double kernel_weight(const KernelSpec& spec, double u, double h) {
  if (!(h > 0.0)) raise(ErrorCode::InvalidArgument, "kernel_weight: bandwidth must be positive");
  switch (spec.family) {
    case KernelFamily::gaussian:
      return normal_pdf(u / h) / h;
  }
  return 0.0;
}

double kde_at(const Eigen::Ref<const Vector>& y, double point, double h, const KernelSpec& spec) {
  if (y.size() == 0) raise(ErrorCode::EmptyInput, "kde_at: empty sample");
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) total += kernel_weight(spec, y[i] - point, h);
  return total / static_cast<double>(y.size());
}

double nw_regress(const Eigen::Ref<const Vector>& responses, const Eigen::Ref<const Vector>& y,
                  double point, double h, const KernelSpec& spec) {
  const Index n = responses.size();
  if (n == 0) raise(ErrorCode::EmptyInput, "nw_regress: empty sample");
  if (y.size() != n) raise(ErrorCode::InvalidArgument, "nw_regress: responses and y lengths differ");

  // Accumulate around a pivot so a constant response is reproduced without
  // rounding, then clamp into the response range (the estimator is a convex
  // combination by construction).
  const double pivot = responses[0];
  double weight_sum = 0.0;
  double shifted_sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double w = kernel_weight(spec, y[i] - point, h);
    weight_sum += w;
    shifted_sum += w * (responses[i] - pivot);
  }
  if (!(weight_sum > 0.0))
    raise(ErrorCode::ZeroWeightMass, "nw_regress: kernel mass vanished at the evaluation point");
  const double value = pivot + shifted_sum / weight_sum;
  return std::clamp(value, responses.minCoeff(), responses.maxCoeff());
}

LocalLinearFit local_linear_fit(const Eigen::Ref<const Vector>& responses,
                                const Eigen::Ref<const Vector>& y, double point, double h,
                                const KernelSpec& spec) {
  const Index n = responses.size();
  if (n == 0) raise(ErrorCode::EmptyInput, "local_linear: empty sample");
  if (y.size() != n) raise(ErrorCode::InvalidArgument, "local_linear: responses and y lengths differ");

  // Normal equations of min sum w_i (r_i - a0 - a1 t_i)^2, t_i = (y_i - point)/h.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double w = kernel_weight(spec, y[i] - point, h);
    const double t = (y[i] - point) / h;
    s0 += w;
    s1 += w * t;
    s2 += w * t * t;
    t0 += w * responses[i];
    t1 += w * t * responses[i];
  }
  if (!(s0 > 0.0)) raise(ErrorCode::ZeroWeightMass, "local_linear: kernel mass vanished");
  const double det = s0 * s2 - s1 * s1;
  if (!(det > 1e-14 * std::max(1.0, s0 * s2)))
    raise(ErrorCode::SingularLocalDesign,
          "local_linear: weighted design is singular (weighted mass at a single y value)");
  LocalLinearFit fit;
  fit.intercept = (s2 * t0 - s1 * t1) / det;
  fit.slope = (s0 * t1 - s1 * t0) / det;
  return fit;
}

double local_linear_regress(const Eigen::Ref<const Vector>& responses, const Eigen::Ref<const Vector>& y,
                            double point, double h, const KernelSpec& spec) {
  return local_linear_fit(responses, y, point, h, spec).intercept;
}

} // namespace uqpe
