#pragma once

#include "uqpe/smoothing.hpp"

namespace uqpe {

enum class RifVariant { ols_linear, ols_quadratic, ols_cubic, logit };

const char* rif_variant_name(RifVariant variant);

struct RifEstimate {
  double tau = 0.0;
  double estimate = 0.0;
  RifVariant variant = RifVariant::ols_linear;
  double density_at_q = 0.0; // kernel density of y at q_tau
  double q_tau = 0.0;
};

// Recentered influence function of the tau-quantile at y_i:
//   q + (tau - 1{y_i <= q}) / f(q).
inline double rif_value(double y_i, double q, double tau, double density) {
  return q + (tau - (y_i <= q ? 1.0 : 0.0)) / density;
}

// RIF vector for the sample; q and the density at q are estimated from y.
Vector compute_rif(const Eigen::Ref<const Vector>& y, double tau, double h, const KernelSpec& spec = {});

// OLS of the RIF on per-covariate polynomial terms (powers 1..degree, no
// cross terms); the estimate is the sample-average derivative of the fitted
// polynomial in the target covariate.
RifEstimate rif_ols_uqpe(const Dataset& data, double tau, int degree, double h);

// Logit of 1{y > q} on the covariates; the estimate is the average logistic
// marginal effect in the target divided by the density of y at q.
RifEstimate rif_logit_uqpe(const Dataset& data, double tau, double h);

struct LogitFit {
  Vector gamma;
  int iterations = 0;
  std::vector<double> loglik_trace; // one entry per iteration, nondecreasing
};

// Newton maximum likelihood with step halving; gradient tolerance 1e-8,
// iteration cap 100. Exposed for direct testing.
LogitFit fit_logit(const Eigen::Ref<const Matrix>& x, const std::vector<char>& response);

// (1/n) sum lambda(x_i' gamma) * gamma_target with lambda the logistic density.
double logit_average_marginal_effect(const Eigen::Ref<const Matrix>& x,
                                     const Eigen::Ref<const Vector>& gamma, Index target);

} // namespace uqpe
