#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "uqpe/estimator.hpp"
#include "uqpe/inference.hpp"

namespace uqpe {

enum class ExtraCovariate { none, independent, correlated };

const char* extra_covariate_name(ExtraCovariate extra);

// Location-scale data generating process
//   y = 1 [+ w] + x + (1 + theta x) u,   x ~ N(10,1),
// with u standardized to mean 0 / variance 1 and w either independent
// N(10,1) or 10 + (x + N(10,1) - 20)/sqrt(2) (correlation 1/sqrt(2)).
struct DgpSpec {
  double theta = 0.0;
  UDist u_dist = UDist::normal;
  ExtraCovariate extra = ExtraCovariate::none;
  Index n = 0;
  std::uint64_t seed = 0;
};

Dataset draw_dgp(const DgpSpec& spec);

struct TrueUqpeOptions {
  std::size_t draws = 10'000'000;
  double band_factor = 0.05; // delta = band_factor * sd(y)
  double tolerance = 0.005;  // max allowed band sensitivity
};

// Population UQPE of the target covariate. Exactly 1 for theta = 0
// (constant conditional slope). Otherwise a simulation oracle: the matched
// slope has the closed form 1 + theta (Q - 1 - x [- w]) / (1 + theta x), and
// its conditional expectation given y near Q is taken over shrinking bands
// around the population quantile with a Richardson extrapolation step.
// Kernel-free by construction, hence independent of the estimator's own
// smoothing. Values are cached per (theta, u_dist, extra, tau).
double true_uqpe(const DgpSpec& spec, double tau, const TrueUqpeOptions& options = {});

// Population tau-quantile of the outcome: closed-form normal convolution in
// the pure location-normal case, otherwise the cached simulation oracle.
double true_unconditional_quantile(const DgpSpec& spec, double tau, const TrueUqpeOptions& options = {});

enum class EstimatorKind { nw, local_linear, rif_ols1, rif_ols2, rif_ols3, rif_logit };

const char* estimator_kind_name(EstimatorKind kind);
std::optional<EstimatorKind> parse_estimator_kind(const std::string& name);

struct ExperimentConfig {
  double theta = 0.0;
  UDist u_dist = UDist::normal;
  ExtraCovariate extra = ExtraCovariate::none;
  std::vector<Index> sample_sizes{2500};
  std::vector<EstimatorKind> estimators{EstimatorKind::nw};
  std::vector<double> taus{0.25, 0.5, 0.75};
  int reps = 200;
  std::uint64_t seed = 1;
  BandwidthRule bandwidth_rule{};
  int grid_size = 0; // 0 = paired_grid_size(n)
  bool coverage = false;
  int bootstrap_B = 100;
  double alpha = 0.05;
  TrueUqpeOptions oracle{};
};

struct SimCell {
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  double truth = 0.0;
  int failures = 0;
  int reps_used = 0;
  std::optional<double> coverage_gaussian;
  std::optional<double> coverage_percentile;
};

// Cells are keyed by (estimator name, tau, n); iteration order is fixed so
// reports serialize deterministically.
struct SimulationReport {
  ExperimentConfig config;
  std::map<std::tuple<std::string, double, Index>, SimCell> cells;
};

// Runs reps independent draws per sample size (replication r of size-index
// k uses child stream k*reps + r of the master seed), evaluates every
// estimator at every tau, and accumulates bias/variance/MSE against the
// oracle truth. Coverage mode additionally wraps each replication in the
// pairwise bootstrap and reports empirical CI coverage. A cell losing more
// than 1% of its replications invalidates the whole report.
SimulationReport run_experiment(const ExperimentConfig& config);

// Tables layout: estimator,tau,n,bias,variance,mse
void write_report_csv(const SimulationReport& report, const std::string& path, const std::string& config_echo);
// Coverage layout: tau,n,gaussian,percentile
void write_coverage_csv(const SimulationReport& report, const std::string& path, const std::string& config_echo);

} // namespace uqpe
