#include "uqpe/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uqpe/math.hpp"
#include "uqpe/parallel.hpp"
#include "uqpe/rng.hpp"

namespace uqpe {

namespace {

Dataset draw_resample(const Dataset& data, SplitMix64 stream) {
  const Index n = data.n();
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    rows[static_cast<std::size_t>(i)] =
        static_cast<Index>(stream.uniform_below(static_cast<std::uint64_t>(n)));
  return select_rows(data, rows);
}

} // namespace

std::vector<BootstrapResult> pairwise_bootstrap_multi(const Dataset& data, const VectorEstimator& estimator,
                                                      int B, std::uint64_t seed, double alpha) {
  if (B < 2) raise(ErrorCode::InvalidArgument, "bootstrap: need B >= 2 replicates");
  if (!(alpha > 0.0 && alpha < 1.0)) raise(ErrorCode::InvalidArgument, "bootstrap: alpha must lie in (0,1)");

  const Vector points = estimator(data); // must succeed before any resampling
  const Index k = points.size();

  Matrix replicates(k, B);
  const SplitMix64 master(seed);
  std::vector<std::string> failures(static_cast<std::size_t>(B));
  parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
    try {
      replicates.col(static_cast<Index>(b)) = estimator(draw_resample(data, master.child(b)));
    } catch (const std::exception& first) {
      try {
        // one retry on a fresh substream, then give up (never drop silently)
        replicates.col(static_cast<Index>(b)) =
            estimator(draw_resample(data, master.child((1ULL << 32) + b)));
      } catch (const std::exception& second) {
        failures[b] = std::string(first.what()) + " / retry: " + second.what();
      }
    }
  });
  for (int b = 0; b < B; ++b)
    if (!failures[static_cast<std::size_t>(b)].empty())
      raise(ErrorCode::ReplicateFailure, "bootstrap replicate " + std::to_string(b) +
                                             " failed twice: " + failures[static_cast<std::size_t>(b)]);

  const double z = alpha == 0.05 ? 1.96 : normal_quantile(1.0 - alpha / 2.0);
  auto rank = [&](double p) {
    const auto r = static_cast<long>(std::ceil(p * static_cast<double>(B) - 1e-9));
    return std::clamp<long>(r, 1, B);
  };

  std::vector<BootstrapResult> results(static_cast<std::size_t>(k));
  for (Index j = 0; j < k; ++j) {
    BootstrapResult& result = results[static_cast<std::size_t>(j)];
    result.point = points[j];
    result.replicates = replicates.row(j).transpose();
    result.B = B;
    result.seed = seed;

    const double mean = result.replicates.mean();
    result.se = std::sqrt((result.replicates.array() - mean).square().sum() / static_cast<double>(B));
    result.gaussian_ci = {result.point - z * result.se, result.point + z * result.se};

    std::vector<double> sorted(result.replicates.data(), result.replicates.data() + B);
    std::sort(sorted.begin(), sorted.end());
    result.percentile_ci = {sorted[static_cast<std::size_t>(rank(alpha / 2.0) - 1)],
                            sorted[static_cast<std::size_t>(rank(1.0 - alpha / 2.0) - 1)]};
  }
  return results;
}

BootstrapResult pairwise_bootstrap(const Dataset& data, const Estimator& estimator, int B,
                                   std::uint64_t seed, double alpha) {
  auto wrapped = [&estimator](const Dataset& sample) {
    Vector value(1);
    value[0] = estimator(sample);
    return value;
  };
  return pairwise_bootstrap_multi(data, wrapped, B, seed, alpha).front();
}

} // namespace uqpe
