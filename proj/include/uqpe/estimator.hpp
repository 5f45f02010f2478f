#pragma once

#include <vector>

#include "uqpe/matching.hpp"
#include "uqpe/smoothing.hpp"

namespace uqpe {

enum class SmoothingMethod { nw, local_linear };

const char* smoothing_method_name(SmoothingMethod method);

struct UqpeEstimate {
  double tau = 0.0;
  double estimate = 0.0;
  SmoothingMethod method = SmoothingMethod::nw;
  double q_tau = 0.0;
  double bandwidth = 0.0;
  int grid_m = 0;
  long boundary_hits = 0;
  Index n = 0;
};

struct UqpeOptions {
  SmoothingMethod method = SmoothingMethod::nw;
  // Evaluate the local-linear fit as a0 + a1 * q_tau instead of a0 (kept
  // behind a flag for comparison; the centered regressor makes a0 the value
  // at the evaluation point).
  bool local_linear_literal = false;
  QrOptions qr{};
  bool warn_on_boundary = true;
};

// Two-step estimate per tau: quantile-regression process + matching, then a
// kernel regression of the matched slopes on the outcome evaluated at the
// unconditional quantile. The process fit and fitted curves are computed
// once and shared across all tau values.
std::vector<UqpeEstimate> estimate_uqpe(const Dataset& data, std::vector<double> taus,
                                        const QuantileGrid& grid, const BandwidthRule& rule,
                                        const UqpeOptions& options = {});

// Same, on an existing process fit (lets callers reuse fits across methods
// or bandwidths).
std::vector<UqpeEstimate> estimate_uqpe_with_fit(const Dataset& data, const QuantileProcessFit& fit,
                                                 const Matrix& curves, std::vector<double> taus,
                                                 const BandwidthRule& rule, const UqpeOptions& options = {});

// Conditional quantile partial effect at eta under the linear model: the
// target coefficient of the grid row nearest eta (exact at grid levels).
double cqpe_at(const QuantileProcessFit& fit, double eta);

} // namespace uqpe
