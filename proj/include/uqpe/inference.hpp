#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "uqpe/dataset.hpp"

namespace uqpe {

struct BootstrapResult {
  double point = 0.0;
  Vector replicates;
  double se = 0.0; // bootstrap standard deviation, 1/B normalization
  std::pair<double, double> gaussian_ci{0.0, 0.0};
  std::pair<double, double> percentile_ci{0.0, 0.0};
  int B = 0;
  std::uint64_t seed = 0;
};

using Estimator = std::function<double(const Dataset&)>;
using VectorEstimator = std::function<Vector(const Dataset&)>;

// Pairwise bootstrap: B row resamples with replacement (outcome/covariate
// pairs kept together), estimator re-run on each. Replicate b draws its
// indices from child stream b of the seed; a failed replicate is retried
// once on child stream 2^32 + b and then aborts the call. The Gaussian
// interval is point +/- 1.96 se at alpha = 0.05 (z_{1-alpha/2} otherwise);
// the percentile interval takes the order statistics at ranks
// ceil(alpha/2 B) and ceil((1-alpha/2) B).
BootstrapResult pairwise_bootstrap(const Dataset& data, const Estimator& estimator, int B,
                                   std::uint64_t seed, double alpha = 0.05);

// Vector-valued variant sharing one resample pass across components
// (e.g. several tau levels); component k of replicate b equals what the
// scalar bootstrap of component k would produce with the same seed.
std::vector<BootstrapResult> pairwise_bootstrap_multi(const Dataset& data, const VectorEstimator& estimator,
                                                      int B, std::uint64_t seed, double alpha = 0.05);

} // namespace uqpe
