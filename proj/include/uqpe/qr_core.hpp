#pragma once

#include "uqpe/dataset.hpp"

namespace uqpe {

// Koenker-Bassett check function rho_tau(u) = u * (tau - 1[u < 0]).
inline double check_loss(double u, double tau) { return u * (tau - (u < 0.0 ? 1.0 : 0.0)); }

double mean_check_loss(const Eigen::Ref<const Vector>& residuals, double tau);

struct QrFit {
  double eta = 0.0;
  Vector beta;
  double objective = 0.0; // attained mean check loss
  int iterations = 0;
  bool converged = false;
};

struct QrOptions {
  double tolerance = 1e-8; // relative duality gap
  int max_iterations = 100;
};

// Single-quantile linear fit by a Frisch-Newton primal-dual interior point
// on the LP formulation of check-loss minimization, followed by a vertex
// refinement so the returned solution interpolates d data points whenever
// that does not worsen the objective. Falls back to projected subgradient
// polishing if the interior point stalls.
QrFit fit_quantile(const Dataset& data, double eta, const QrOptions& options = {});

// Same, on a raw design; rank checking can be hoisted out by callers that
// fit many quantiles on one design.
QrFit fit_quantile_design(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y, double eta,
                          const QrOptions& options = {}, bool check_rank = true);

// Componentwise subgradient residual |(1/n) sum (eta - 1{y <= x'b}) x|,
// reported as its max norm. At an optimum this is at most d*max|x|/n plus
// rounding; exposed for optimality diagnostics and tests.
double subgradient_gap(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                       const Eigen::Ref<const Vector>& beta, double eta);

// Sample tau-quantile: minimizer of the mean check loss in q. When the
// minimizing set is an interval the lower endpoint is returned, i.e. the
// order statistic y_(ceil(n*tau)).
double unconditional_quantile(const Eigen::Ref<const Vector>& y, double tau);

} // namespace uqpe
