#pragma once

#include "uqpe/qr_core.hpp"

namespace uqpe {

// Uniform quantile grid {eta_1 < ... < eta_m} inside (epsilon, 1-epsilon).
struct QuantileGrid {
  int m = 0;
  Vector levels;
  double epsilon = 0.0;

  double spacing() const { return m > 1 ? levels[1] - levels[0] : 0.0; }
};

// eta_j = j/(m+1), epsilon = 1/(m+1). Needs m >= 3.
QuantileGrid default_grid(int m);

// Coarse library default: 99 levels up to n = 2500, 199 above.
int default_grid_size(Index n);

// Simulation pairing 250->9, 500->24, 2500->99, 5000->199; other sample
// sizes take the m of the nearest listed n (ties go to the larger n).
int paired_grid_size(Index n);

struct QuantileProcessFit {
  QuantileGrid grid;
  Matrix betas; // m x d, row j = coefficients at eta_j
  Index target_index = 0;
  long crossing_count = 0; // (observation, j) pairs with decreasing raw fits
  bool rearranged = false;

  Vector slope_process() const { return betas.col(target_index); }
};

// Fits the m quantile regressions (independent problems, run in parallel,
// assembled in grid order) and records crossing diagnostics on the sample.
QuantileProcessFit fit_process(const Dataset& data, const QuantileGrid& grid,
                               const QrOptions& options = {});

// Pairs of adjacent grid levels whose fitted values decrease, over all rows.
long count_crossings(const Matrix& raw_curves);

// Per-row monotone rearrangement (ascending sort). Idempotent; preserves
// each row's multiset of values.
void rearrange_rows(Matrix& curves);

// Fitted conditional quantile curves x_i' beta(eta_j) for the given design
// rows, monotone-rearranged per observation when the fit saw crossings.
Matrix evaluate_curves_at(const QuantileProcessFit& fit, const Eigen::Ref<const Matrix>& x);
Matrix evaluate_curves(const QuantileProcessFit& fit, const Dataset& data);

// Plot-ready export: one row per eta level, columns = coefficient names.
void write_process_csv(const QuantileProcessFit& fit, const std::vector<std::string>& column_names,
                       const std::string& path, const std::string& config_echo = {});

} // namespace uqpe
