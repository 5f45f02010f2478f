#include "uqpe/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>

#include "uqpe/parallel.hpp"
#include "uqpe/rif.hpp"
#include "uqpe/rng.hpp"

namespace uqpe {

const char* extra_covariate_name(ExtraCovariate extra) {
  switch (extra) {
    case ExtraCovariate::none: return "none";
    case ExtraCovariate::independent: return "independent";
    case ExtraCovariate::correlated: return "correlated";
  }
  return "none";
}

const char* estimator_kind_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::nw: return "nw";
    case EstimatorKind::local_linear: return "local-linear";
    case EstimatorKind::rif_ols1: return "rif-ols-linear";
    case EstimatorKind::rif_ols2: return "rif-ols-quadratic";
    case EstimatorKind::rif_ols3: return "rif-ols-cubic";
    case EstimatorKind::rif_logit: return "rif-logit";
  }
  return "nw";
}

std::optional<EstimatorKind> parse_estimator_kind(const std::string& name) {
  static const std::pair<const char*, EstimatorKind> table[] = {
      {"nw", EstimatorKind::nw},
      {"local-linear", EstimatorKind::local_linear},
      {"rif-ols-linear", EstimatorKind::rif_ols1},
      {"rif-ols-quadratic", EstimatorKind::rif_ols2},
      {"rif-ols-cubic", EstimatorKind::rif_ols3},
      {"rif-logit", EstimatorKind::rif_logit},
  };
  for (const auto& [key, kind] : table)
    if (name == key) return kind;
  return std::nullopt;
}

namespace {

struct DrawScratch {
  double x;
  double w; // unused unless the spec has an extra covariate
  double u;
};

DrawScratch draw_row(SplitMix64& stream, const DgpSpec& spec) {
  DrawScratch row{};
  row.x = 10.0 + stream.normal();
  switch (spec.extra) {
    case ExtraCovariate::none:
      break;
    case ExtraCovariate::independent:
      row.w = 10.0 + stream.normal();
      break;
    case ExtraCovariate::correlated:
      row.w = 10.0 + (row.x + (10.0 + stream.normal()) - 20.0) / kSqrt2;
      break;
  }
  row.u = stream.draw(spec.u_dist);
  return row;
}

double dgp_outcome(const DrawScratch& row, const DgpSpec& spec) {
  const double location = 1.0 + row.x + (spec.extra == ExtraCovariate::none ? 0.0 : row.w);
  return location + (1.0 + spec.theta * row.x) * row.u;
}

} // namespace

Dataset draw_dgp(const DgpSpec& spec) {
  if (spec.n < 10) raise(ErrorCode::InvalidArgument, "draw_dgp: need n >= 10");
  const bool has_w = spec.extra != ExtraCovariate::none;
  const Index d = has_w ? 3 : 2;

  Dataset data;
  data.y.resize(spec.n);
  data.x.resize(spec.n, d);
  data.x.col(0).setOnes();

  SplitMix64 stream(spec.seed);
  for (Index i = 0; i < spec.n; ++i) {
    const DrawScratch row = draw_row(stream, spec);
    if (has_w) data.x(i, 1) = row.w;
    data.x(i, d - 1) = row.x;
    data.y[i] = dgp_outcome(row, spec);
  }
  data.target_index = d - 1;
  data.column_names = has_w ? std::vector<std::string>{"const", "w", "x"}
                            : std::vector<std::string>{"const", "x"};
  validate(data);
  return data;
}

namespace {

// Fixed internal seed: the oracle is a population quantity, independent of
// any experiment's seed.
constexpr std::uint64_t kOracleSeed = 0xA11CE5EEDULL;

struct OracleKey {
  double theta;
  UDist u_dist;
  ExtraCovariate extra;
  std::size_t draws;

  bool operator<(const OracleKey& other) const {
    return std::tie(theta, u_dist, extra, draws) <
           std::tie(other.theta, other.u_dist, other.extra, other.draws);
  }
};

std::map<OracleKey, std::shared_ptr<const std::vector<double>>> g_sorted_outcomes;
std::map<std::pair<OracleKey, double>, double> g_true_uqpe;
std::mutex g_oracle_mutex;

std::shared_ptr<const std::vector<double>> oracle_sorted_outcomes(const OracleKey& key,
                                                                  const DgpSpec& spec) {
  {
    std::lock_guard<std::mutex> lock(g_oracle_mutex);
    auto it = g_sorted_outcomes.find(key);
    if (it != g_sorted_outcomes.end()) return it->second;
  }
  auto outcomes = std::make_shared<std::vector<double>>(key.draws);
  SplitMix64 stream(kOracleSeed);
  for (std::size_t i = 0; i < key.draws; ++i) {
    const DrawScratch row = draw_row(stream, spec);
    (*outcomes)[i] = dgp_outcome(row, spec);
  }
  std::sort(outcomes->begin(), outcomes->end());
  std::lock_guard<std::mutex> lock(g_oracle_mutex);
  return g_sorted_outcomes.emplace(key, std::move(outcomes)).first->second;
}

} // namespace

double true_unconditional_quantile(const DgpSpec& spec, double tau, const TrueUqpeOptions& options) {
  if (!(tau > 0.0 && tau < 1.0))
    raise(ErrorCode::InvalidArgument, "true_unconditional_quantile: tau must lie in (0,1)");
  if (spec.theta == 0.0 && spec.u_dist == UDist::normal) {
    // y is Gaussian: mean 11 (21 with an extra covariate), variance
    // Var(location) + 1
    double mean = 11.0, variance = 2.0;
    if (spec.extra == ExtraCovariate::independent) {
      mean = 21.0;
      variance = 3.0;
    } else if (spec.extra == ExtraCovariate::correlated) {
      mean = 21.0;
      variance = 3.0 + kSqrt2; // Var(w + x) = 2 + sqrt(2)
    }
    return mean + std::sqrt(variance) * normal_quantile(tau);
  }
  const OracleKey key{spec.theta, spec.u_dist, spec.extra, options.draws};
  const auto sorted = oracle_sorted_outcomes(key, spec);
  const std::size_t n = sorted->size();
  auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * tau - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return (*sorted)[rank - 1];
}

double true_uqpe(const DgpSpec& spec, double tau, const TrueUqpeOptions& options) {
  if (!(tau > 0.0 && tau < 1.0)) raise(ErrorCode::InvalidArgument, "true_uqpe: tau must lie in (0,1)");
  if (spec.theta == 0.0) return 1.0; // constant conditional slope

  const OracleKey key{spec.theta, spec.u_dist, spec.extra, options.draws};
  {
    std::lock_guard<std::mutex> lock(g_oracle_mutex);
    auto it = g_true_uqpe.find({key, tau});
    if (it != g_true_uqpe.end()) return it->second;
  }

  const auto sorted = oracle_sorted_outcomes(key, spec);
  const std::size_t n = sorted->size();
  auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * tau - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  const double q = (*sorted)[rank - 1];

  double mean = 0.0;
  for (double v : *sorted) mean += v;
  mean /= static_cast<double>(n);
  double variance = 0.0;
  for (double v : *sorted) variance += (v - mean) * (v - mean);
  const double sd = std::sqrt(variance / static_cast<double>(n - 1));

  const double delta = options.band_factor * sd;
  double band_sum[2] = {0.0, 0.0};
  std::size_t band_count[2] = {0, 0};

  // Second pass restates the draw stream; the matched slope at a draw is
  // 1 + theta (q - location) / scale by the closed-form matching level.
  SplitMix64 stream(kOracleSeed);
  for (std::size_t i = 0; i < n; ++i) {
    const DrawScratch row = draw_row(stream, spec);
    const double y = dgp_outcome(row, spec);
    const double gap = std::abs(y - q);
    if (gap > delta) continue;
    const double location = 1.0 + row.x + (spec.extra == ExtraCovariate::none ? 0.0 : row.w);
    const double scale = 1.0 + spec.theta * row.x;
    if (scale <= 0.0)
      raise(ErrorCode::OracleNotConverged, "true_uqpe: draw with nonpositive scale 1 + theta*x");
    const double slope = 1.0 + spec.theta * (q - location) / scale;
    band_sum[0] += slope;
    ++band_count[0];
    if (gap <= 0.5 * delta) {
      band_sum[1] += slope;
      ++band_count[1];
    }
  }
  if (band_count[1] < 1000)
    raise(ErrorCode::OracleNotConverged, "true_uqpe: too few draws in the conditioning band");

  const double wide = band_sum[0] / static_cast<double>(band_count[0]);
  const double narrow = band_sum[1] / static_cast<double>(band_count[1]);
  if (std::abs(narrow - wide) > options.tolerance)
    raise(ErrorCode::OracleNotConverged,
          "true_uqpe: band sensitivity " + std::to_string(std::abs(narrow - wide)) + " exceeds " +
              std::to_string(options.tolerance));
  const double value = (4.0 * narrow - wide) / 3.0; // Richardson step in delta^2

  std::lock_guard<std::mutex> lock(g_oracle_mutex);
  g_true_uqpe.emplace(std::make_pair(key, tau), value);
  return value;
}

namespace {

struct RepOutcome {
  Matrix values;                      // estimators x taus, NaN marks failure
  std::vector<std::string> failures;  // one per estimator kind
  // coverage flags per tau (only filled in coverage mode, nw estimator)
  std::vector<char> covered_gaussian;
  std::vector<char> covered_percentile;
  bool bootstrap_failed = false;
};

Vector evaluate_uqpe_kind(const Dataset& data, const std::vector<double>& taus, int grid_size,
                          const BandwidthRule& rule, SmoothingMethod method) {
  UqpeOptions options;
  options.method = method;
  options.warn_on_boundary = false;
  const auto estimates = estimate_uqpe(data, taus, default_grid(grid_size), rule, options);
  Vector values(static_cast<Index>(estimates.size()));
  for (std::size_t k = 0; k < estimates.size(); ++k) values[static_cast<Index>(k)] = estimates[k].estimate;
  return values;
}

} // namespace

SimulationReport run_experiment(const ExperimentConfig& config) {
  if (config.reps < 2) raise(ErrorCode::InvalidArgument, "run_experiment: need reps >= 2");
  if (config.sample_sizes.empty() || config.estimators.empty() || config.taus.empty())
    raise(ErrorCode::InvalidArgument, "run_experiment: nothing to do");
  if (config.coverage)
    for (EstimatorKind kind : config.estimators)
      if (kind != EstimatorKind::nw)
        raise(ErrorCode::InvalidArgument, "run_experiment: coverage mode supports the nw estimator only");

  std::vector<double> taus = config.taus;
  std::sort(taus.begin(), taus.end());
  const auto n_taus = taus.size();
  const auto n_kinds = config.estimators.size();

  DgpSpec base;
  base.theta = config.theta;
  base.u_dist = config.u_dist;
  base.extra = config.extra;

  std::vector<double> truths(n_taus);
  for (std::size_t t = 0; t < n_taus; ++t) truths[t] = true_uqpe(base, taus[t], config.oracle);

  SimulationReport report;
  report.config = config;

  const SplitMix64 master(config.seed);
  for (std::size_t size_index = 0; size_index < config.sample_sizes.size(); ++size_index) {
    const Index n = config.sample_sizes[size_index];
    const int grid_size = config.grid_size > 0 ? config.grid_size : paired_grid_size(n);

    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.reps));
    parallel_for(static_cast<std::size_t>(config.reps), [&](std::size_t r) {
      RepOutcome& outcome = outcomes[r];
      outcome.values = Matrix::Constant(static_cast<Index>(n_kinds), static_cast<Index>(n_taus),
                                        std::numeric_limits<double>::quiet_NaN());
      outcome.failures.resize(n_kinds);

      const SplitMix64 rep_stream =
          master.child(size_index * static_cast<std::size_t>(config.reps) + r);
      DgpSpec spec = base;
      spec.n = n;
      spec.seed = rep_stream.seed();
      const Dataset data = draw_dgp(spec);

      double h = 0.0;
      for (std::size_t k = 0; k < n_kinds; ++k) {
        try {
          switch (config.estimators[k]) {
            case EstimatorKind::nw:
              outcome.values.row(static_cast<Index>(k)) =
                  evaluate_uqpe_kind(data, taus, grid_size, config.bandwidth_rule, SmoothingMethod::nw)
                      .transpose();
              break;
            case EstimatorKind::local_linear:
              outcome.values.row(static_cast<Index>(k)) =
                  evaluate_uqpe_kind(data, taus, grid_size, config.bandwidth_rule,
                                     SmoothingMethod::local_linear)
                      .transpose();
              break;
            default: {
              if (h == 0.0) h = bandwidth(config.bandwidth_rule, data.y);
              for (std::size_t t = 0; t < n_taus; ++t) {
                RifEstimate rif;
                if (config.estimators[k] == EstimatorKind::rif_logit)
                  rif = rif_logit_uqpe(data, taus[t], h);
                else
                  rif = rif_ols_uqpe(data, taus[t],
                                     config.estimators[k] == EstimatorKind::rif_ols1   ? 1
                                     : config.estimators[k] == EstimatorKind::rif_ols2 ? 2
                                                                                       : 3,
                                     h);
                outcome.values(static_cast<Index>(k), static_cast<Index>(t)) = rif.estimate;
              }
              break;
            }
          }
        } catch (const std::exception& e) {
          outcome.failures[k] = e.what();
        }
      }

      if (config.coverage) {
        outcome.covered_gaussian.assign(n_taus, 0);
        outcome.covered_percentile.assign(n_taus, 0);
        try {
          const auto results = pairwise_bootstrap_multi(
              data,
              [&](const Dataset& sample) {
                return evaluate_uqpe_kind(sample, taus, grid_size, config.bandwidth_rule,
                                          SmoothingMethod::nw);
              },
              config.bootstrap_B, rep_stream.child(0xB007).seed(), config.alpha);
          for (std::size_t t = 0; t < n_taus; ++t) {
            const auto& ci = results[t];
            outcome.covered_gaussian[t] =
                ci.gaussian_ci.first <= truths[t] && truths[t] <= ci.gaussian_ci.second;
            outcome.covered_percentile[t] =
                ci.percentile_ci.first <= truths[t] && truths[t] <= ci.percentile_ci.second;
          }
        } catch (const std::exception&) {
          outcome.bootstrap_failed = true;
        }
      }
    });

    // serial aggregation in replication order keeps reports bit-identical
    for (std::size_t k = 0; k < n_kinds; ++k) {
      const std::string name = estimator_kind_name(config.estimators[k]);
      for (std::size_t t = 0; t < n_taus; ++t) {
        SimCell cell;
        cell.truth = truths[t];
        std::vector<double> estimates;
        estimates.reserve(static_cast<std::size_t>(config.reps));
        long covered_g = 0, covered_p = 0, coverage_reps = 0;
        for (int r = 0; r < config.reps; ++r) {
          const auto& outcome = outcomes[static_cast<std::size_t>(r)];
          const double value = outcome.values(static_cast<Index>(k), static_cast<Index>(t));
          if (std::isnan(value))
            ++cell.failures;
          else
            estimates.push_back(value);
          if (config.coverage && config.estimators[k] == EstimatorKind::nw) {
            if (outcome.bootstrap_failed) {
              if (!std::isnan(value)) ++cell.failures;
            } else {
              ++coverage_reps;
              covered_g += outcome.covered_gaussian[t];
              covered_p += outcome.covered_percentile[t];
            }
          }
        }
        if (cell.failures > 0 &&
            static_cast<double>(cell.failures) > 0.01 * static_cast<double>(config.reps))
          raise(ErrorCode::CellFailureRateExceeded,
                "run_experiment: cell (" + name + ", tau=" + std::to_string(taus[t]) +
                    ", n=" + std::to_string(n) + ") lost " + std::to_string(cell.failures) + " of " +
                    std::to_string(config.reps) + " replications");
        cell.reps_used = static_cast<int>(estimates.size());
        double mean = 0.0;
        for (double v : estimates) mean += v;
        mean /= static_cast<double>(estimates.size());
        double variance = 0.0, mse = 0.0;
        for (double v : estimates) {
          variance += (v - mean) * (v - mean);
          mse += (v - truths[t]) * (v - truths[t]);
        }
        cell.bias = mean - truths[t];
        cell.variance = variance / static_cast<double>(estimates.size());
        cell.mse = mse / static_cast<double>(estimates.size());
        if (config.coverage && config.estimators[k] == EstimatorKind::nw && coverage_reps > 0) {
          cell.coverage_gaussian = static_cast<double>(covered_g) / static_cast<double>(coverage_reps);
          cell.coverage_percentile = static_cast<double>(covered_p) / static_cast<double>(coverage_reps);
        }
        report.cells.emplace(std::make_tuple(name, taus[t], n), cell);
      }
    }
  }
  return report;
}

namespace {

void write_config_comment(std::ofstream& out, const std::string& config_echo) {
  if (!config_echo.empty()) out << "# " << config_echo << '\n';
}

} // namespace

void write_report_csv(const SimulationReport& report, const std::string& path,
                      const std::string& config_echo) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::InvalidArgument, "write_report_csv: cannot open '" + path + "'");
  write_config_comment(out, config_echo);
  out << "estimator,tau,n,bias,variance,mse\n";
  char buffer[64];
  auto put = [&](double v) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    out << buffer;
  };
  for (const auto& [key, cell] : report.cells) {
    out << std::get<0>(key) << ',';
    put(std::get<1>(key));
    out << ',' << std::get<2>(key) << ',';
    put(cell.bias);
    out << ',';
    put(cell.variance);
    out << ',';
    put(cell.mse);
    out << '\n';
  }
}

void write_coverage_csv(const SimulationReport& report, const std::string& path,
                        const std::string& config_echo) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::InvalidArgument, "write_coverage_csv: cannot open '" + path + "'");
  write_config_comment(out, config_echo);
  out << "tau,n,gaussian,percentile\n";
  char buffer[64];
  for (const auto& [key, cell] : report.cells) {
    if (!cell.coverage_gaussian) continue;
    std::snprintf(buffer, sizeof(buffer), "%.17g", std::get<1>(key));
    out << buffer << ',' << std::get<2>(key) << ',';
    std::snprintf(buffer, sizeof(buffer), "%.6g", *cell.coverage_gaussian);
    out << buffer << ',';
    std::snprintf(buffer, sizeof(buffer), "%.6g", *cell.coverage_percentile);
    out << buffer << '\n';
  }
}

} // namespace uqpe
