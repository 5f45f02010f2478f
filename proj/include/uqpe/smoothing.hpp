#pragma once

#include "uqpe/dataset.hpp"
#include "uqpe/math.hpp"

namespace uqpe {

// Only the Gaussian kernel ships (order r = 2, symmetric, unit mass).
enum class KernelFamily { gaussian };

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
};

// Rule-of-thumb bandwidth h = constant * sd(y) * n^(-exponent). The default
// exponent 1/5 is the admissible lower edge for a second-order kernel.
struct BandwidthRule {
  double constant = 0.9;
  double exponent = 0.2;
};

double bandwidth(const BandwidthRule& rule, const Eigen::Ref<const Vector>& y);

// Rescaled kernel K_h(u) = K(u/h)/h.
double kernel_weight(const KernelSpec& spec, double u, double h);

// Kernel density estimate (1/n) sum K_h(y_i - point).
double kde_at(const Eigen::Ref<const Vector>& y, double point, double h, const KernelSpec& spec = {});

// Nadaraya-Watson regression of responses on y, evaluated at point:
// sum K_h(y_i - point) r_i / sum K_h(y_i - point). Always a convex
// combination of the responses.
double nw_regress(const Eigen::Ref<const Vector>& responses, const Eigen::Ref<const Vector>& y,
                  double point, double h, const KernelSpec& spec = {});

// Weighted least squares fit of r_i on (1, (y_i - point)/h) with kernel
// weights; the intercept is the local-linear estimate at the point.
struct LocalLinearFit {
  double intercept = 0.0;
  double slope = 0.0; // per unit of the standardized regressor (y - point)/h
};

LocalLinearFit local_linear_fit(const Eigen::Ref<const Vector>& responses,
                                const Eigen::Ref<const Vector>& y, double point, double h,
                                const KernelSpec& spec = {});

double local_linear_regress(const Eigen::Ref<const Vector>& responses, const Eigen::Ref<const Vector>& y,
                            double point, double h, const KernelSpec& spec = {});

} // namespace uqpe
