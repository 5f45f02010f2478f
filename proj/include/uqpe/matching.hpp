#pragma once

#include <vector>

#include "uqpe/math.hpp"
#include "uqpe/qr_process.hpp"

namespace uqpe {

// Per-observation match of the unconditional tau-quantile into the fitted
// conditional quantile curves. xi holds the matched grid level (or epsilon
// when the quantile falls below the lowest curve); matched_slope holds the
// target coefficient of the matched grid row.
struct MatchResult {
  double tau = 0.0;
  double q_tau = 0.0;
  Vector xi;
  Vector matched_slope;
  std::vector<int> grid_row;  // matched row index into the beta process
  long boundary_hits = 0;     // observations clamped to the first or last level
};

// Three-branch bracket rule on monotone curves:
//   xi = epsilon                     if q_tau <  curve(eta_1)
//   xi = eta_j                       if curve(eta_j) <= q_tau < curve(eta_{j+1})
//   xi = eta_m                       if curve(eta_m) <= q_tau.
// Curves must be row-monotone (as produced by evaluate_curves), which makes
// the bracket unique.
MatchResult match_curves(const Matrix& monotone_curves, const QuantileProcessFit& fit, double tau,
                         double q_tau);

// Convenience wrapper: evaluates the curves for the sample, estimates the
// unconditional quantile, and matches every observation.
MatchResult match_observations(const QuantileProcessFit& fit, const Dataset& data, double tau);

// Closed-form matching level for the location-scale model
// y = alpha0 + alpha1 x1 + (1 + theta x1) u:
//   xi_tau(x1) = F_U((q_tau - alpha0 - alpha1 x1) / (1 + theta x1)).
double oracle_xi_location_scale(double alpha0, double alpha1, double theta, UDist u_dist, double q_tau,
                                double x1);

// Long-format export (tau, x1, xi, matched_slope), the data behind the
// matched-coefficient profile plots.
void write_match_csv(const Dataset& data, const std::vector<MatchResult>& matches, const std::string& path,
                     const std::string& config_echo = {});

// Fraction of clamped observations above which a grid warning is issued.
inline constexpr double kBoundaryWarningShare = 0.05;

} // namespace uqpe
