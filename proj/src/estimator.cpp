#include "uqpe/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "uqpe/parallel.hpp"

namespace uqpe {

const char* smoothing_method_name(SmoothingMethod method) {
  return method == SmoothingMethod::nw ? "nw" : "local-linear";
}

namespace {

double smooth_matched_slopes(const Dataset& data, const MatchResult& match, double h,
                             const UqpeOptions& options) {
  if (options.method == SmoothingMethod::local_linear) {
    try {
      const LocalLinearFit fit = local_linear_fit(match.matched_slope, data.y, match.q_tau, h);
      return options.local_linear_literal ? fit.intercept + fit.slope * match.q_tau : fit.intercept;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularLocalDesign) throw;
      // degenerate local design: fall back to the kernel-weighted mean
    }
  }
  const double estimate = nw_regress(match.matched_slope, data.y, match.q_tau, h);
  const double lo = match.matched_slope.minCoeff();
  const double hi = match.matched_slope.maxCoeff();
  if (estimate < lo || estimate > hi)
    raise(ErrorCode::SolverDivergence, "uqpe: smoothing left the convex hull of matched slopes");
  return estimate;
}

} // namespace

std::vector<UqpeEstimate> estimate_uqpe_with_fit(const Dataset& data, const QuantileProcessFit& fit,
                                                 const Matrix& curves, std::vector<double> taus,
                                                 const BandwidthRule& rule, const UqpeOptions& options) {
  for (double tau : taus)
    if (!(tau > 0.0 && tau < 1.0))
      raise(ErrorCode::InvalidArgument, "estimate_uqpe: tau must lie in (0,1)");
  std::sort(taus.begin(), taus.end());

  const double h = bandwidth(rule, data.y);

  std::vector<UqpeEstimate> estimates(taus.size());
  parallel_for(taus.size(), [&](std::size_t k) {
    const double tau = taus[k];
    try {
      const double q_tau = unconditional_quantile(data.y, tau);
      const MatchResult match = match_curves(curves, fit, tau, q_tau);
      if (options.warn_on_boundary &&
          match.boundary_hits > kBoundaryWarningShare * static_cast<double>(data.n()))
        std::cerr << "uqpe: warning: " << match.boundary_hits << " of " << data.n()
                  << " observations clamped to a grid boundary at tau=" << tau
                  << "; consider a finer or wider quantile grid\n";
      UqpeEstimate& est = estimates[k];
      est.tau = tau;
      est.method = options.method;
      est.q_tau = q_tau;
      est.bandwidth = h;
      est.grid_m = fit.grid.m;
      est.boundary_hits = match.boundary_hits;
      est.n = data.n();
      est.estimate = smooth_matched_slopes(data, match, h, options);
    } catch (const Error& e) {
      throw Error(e.code(), "smoothing stage at tau=" + std::to_string(tau) + ": " + e.what());
    }
  });
  return estimates;
}

std::vector<UqpeEstimate> estimate_uqpe(const Dataset& data, std::vector<double> taus,
                                        const QuantileGrid& grid, const BandwidthRule& rule,
                                        const UqpeOptions& options) {
  validate(data);
  QuantileProcessFit fit;
  try {
    fit = fit_process(data, grid, options.qr);
  } catch (const Error& e) {
    throw Error(e.code(), std::string("quantile-process stage: ") + e.what());
  }
  const Matrix curves = evaluate_curves(fit, data);
  return estimate_uqpe_with_fit(data, fit, curves, std::move(taus), rule, options);
}

double cqpe_at(const QuantileProcessFit& fit, double eta) {
  const Vector& levels = fit.grid.levels;
  if (eta < levels[0] - 1e-12 || eta > levels[fit.grid.m - 1] + 1e-12)
    raise(ErrorCode::OutOfGridRange,
          "cqpe_at: eta=" + std::to_string(eta) + " lies outside the fitted grid range");
  Index nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < levels.size(); ++j) {
    const double distance = std::abs(levels[j] - eta);
    if (distance < best) {
      best = distance;
      nearest = j;
    }
  }
  return fit.betas(nearest, fit.target_index);
}

} // namespace uqpe
