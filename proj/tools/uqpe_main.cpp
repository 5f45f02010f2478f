// Command-line front end: estimate (UQPE + baselines on a CSV), simulate
// (Monte Carlo bias/variance/MSE and bootstrap coverage tables), match
// (per-observation matched quantile levels and slopes).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "uqpe/estimator.hpp"
#include "uqpe/inference.hpp"
#include "uqpe/parallel.hpp"
#include "uqpe/rif.hpp"
#include "uqpe/rng.hpp"
#include "uqpe/simulation.hpp"

using nlohmann::json;

namespace {

struct CommonIo {
  std::string data_path;
  std::string outcome;
  std::string target;
  std::vector<std::string> controls;
  bool drop_na = false;
  int grid = 0; // 0 = size-paired default
  std::string out_path;
  int threads = 0;
  std::uint64_t seed = 1;
};

struct EstimateOptions {
  CommonIo io;
  std::vector<double> taus{0.1, 0.25, 0.5, 0.75, 0.9};
  double bandwidth_constant = 0.9;
  std::string bandwidth_exponent = "1/5";
  std::string method = "nw";
  bool ll_literal = false;
  std::vector<std::string> baselines;
  int bootstrap = 200;
  double alpha = 0.05;
  std::string format = "json";
  std::string export_process;
};

struct SimulateOptions {
  std::string dgp = "loc-normal";
  std::vector<uqpe::Index> sample_sizes;
  int reps = 200;
  std::vector<double> taus{0.25, 0.5, 0.75};
  std::vector<std::string> estimators{"nw", "rif-ols-cubic", "rif-logit"};
  int grid = 0;
  double bandwidth_constant = 0.9;
  std::string bandwidth_exponent = "1/5";
  bool sweep_bandwidth = false;
  bool coverage = false;
  int bootstrap_B = 100;
  double alpha = 0.05;
  std::string out_path;
  int threads = 0;
  std::uint64_t seed = 1;
};

struct MatchOptions {
  CommonIo io;
  std::vector<double> taus{0.25, 0.5, 0.75};
};

double parse_exponent(const std::string& text) {
  if (text == "1/4") return 0.25;
  if (text == "1/5") return 0.2;
  if (text == "1/6") return 1.0 / 6.0;
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used == text.size()) return value;
  } catch (...) {
  }
  uqpe::raise(uqpe::ErrorCode::InvalidArgument,
              "bandwidth exponent must be 1/4, 1/5, 1/6 or a decimal rate");
}

void resolve_threads(int threads) {
  if (threads == 0) {
    if (const char* env = std::getenv("UQPE_THREADS")) threads = std::atoi(env);
  }
  uqpe::set_max_threads(threads);
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) uqpe::raise(uqpe::ErrorCode::InvalidArgument, "cannot open output file '" + path + "'");
  return file;
}

json ci_to_json(const std::pair<double, double>& ci) { return json::array({ci.first, ci.second}); }

json inference_to_json(const uqpe::BootstrapResult& b) {
  return json{{"se", b.se},
              {"gaussian_ci", ci_to_json(b.gaussian_ci)},
              {"percentile_ci", ci_to_json(b.percentile_ci)},
              {"B", b.B},
              {"seed", b.seed}};
}

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

// ---------------------------------------------------------------- estimate

int run_estimate(const EstimateOptions& opt) {
  resolve_threads(opt.io.threads);

  uqpe::CsvSelection selection{opt.io.outcome, opt.io.target, opt.io.controls, opt.io.drop_na};
  const uqpe::Dataset data = uqpe::load_csv(opt.io.data_path, selection);

  const int m = opt.io.grid > 0 ? opt.io.grid : uqpe::paired_grid_size(data.n());
  const uqpe::QuantileGrid grid = uqpe::default_grid(m);
  const uqpe::BandwidthRule rule{opt.bandwidth_constant, parse_exponent(opt.bandwidth_exponent)};

  uqpe::UqpeOptions uqpe_options;
  if (opt.method == "nw")
    uqpe_options.method = uqpe::SmoothingMethod::nw;
  else if (opt.method == "local-linear")
    uqpe_options.method = uqpe::SmoothingMethod::local_linear;
  else
    uqpe::raise(uqpe::ErrorCode::InvalidArgument, "--method must be nw or local-linear");
  uqpe_options.local_linear_literal = opt.ll_literal;

  std::vector<std::string> baselines = opt.baselines;
  if (baselines.size() == 1 && baselines[0] == "all")
    baselines = {"rif-ols-linear", "rif-ols-quadratic", "rif-ols-cubic", "rif-logit"};
  std::vector<uqpe::EstimatorKind> baseline_kinds;
  for (const auto& name : baselines) {
    const auto kind = uqpe::parse_estimator_kind(name);
    if (!kind || *kind == uqpe::EstimatorKind::nw || *kind == uqpe::EstimatorKind::local_linear)
      uqpe::raise(uqpe::ErrorCode::InvalidArgument, "unknown baseline '" + name + "'");
    baseline_kinds.push_back(*kind);
  }

  json config{{"command", "estimate"},
              {"data", opt.io.data_path},
              {"outcome", opt.io.outcome},
              {"target", opt.io.target},
              {"controls", opt.io.controls},
              {"drop_na", opt.io.drop_na},
              {"tau", opt.taus},
              {"grid_m", m},
              {"bandwidth_constant", opt.bandwidth_constant},
              {"bandwidth_exponent", opt.bandwidth_exponent},
              {"method", opt.method},
              {"local_linear_literal", opt.ll_literal},
              {"baselines", baselines},
              {"bootstrap_B", opt.bootstrap},
              {"alpha", opt.alpha},
              {"seed", opt.io.seed},
              {"format", opt.format},
              {"n", data.n()}};

  // stage 1/2 shared across tau values and estimators
  uqpe::QuantileProcessFit fit;
  try {
    fit = uqpe::fit_process(data, grid);
  } catch (const uqpe::Error& e) {
    throw uqpe::Error(e.code(), std::string("quantile-process stage: ") + e.what());
  }
  const uqpe::Matrix curves = uqpe::evaluate_curves(fit, data);
  const std::vector<uqpe::UqpeEstimate> estimates =
      uqpe::estimate_uqpe_with_fit(data, fit, curves, opt.taus, rule, uqpe_options);

  if (!opt.export_process.empty())
    uqpe::write_process_csv(fit, data.column_names, opt.export_process, config.dump());

  const double h = uqpe::bandwidth(rule, data.y);
  std::vector<std::vector<uqpe::RifEstimate>> baseline_estimates;
  for (uqpe::EstimatorKind kind : baseline_kinds) {
    std::vector<uqpe::RifEstimate> per_tau;
    for (const auto& est : estimates) {
      if (kind == uqpe::EstimatorKind::rif_logit)
        per_tau.push_back(uqpe::rif_logit_uqpe(data, est.tau, h));
      else
        per_tau.push_back(uqpe::rif_ols_uqpe(data, est.tau,
                                             kind == uqpe::EstimatorKind::rif_ols1   ? 1
                                             : kind == uqpe::EstimatorKind::rif_ols2 ? 2
                                                                                     : 3,
                                             h));
    }
    baseline_estimates.push_back(std::move(per_tau));
  }

  // bootstrap: one resample pass per estimator, shared across tau values
  const uqpe::SplitMix64 master(opt.io.seed);
  std::vector<double> taus;
  for (const auto& est : estimates) taus.push_back(est.tau);

  std::optional<std::vector<uqpe::BootstrapResult>> main_inference;
  std::vector<std::vector<uqpe::BootstrapResult>> baseline_inference(baseline_kinds.size());
  if (opt.bootstrap > 0) {
    uqpe::UqpeOptions silent = uqpe_options;
    silent.warn_on_boundary = false;
    main_inference = uqpe::pairwise_bootstrap_multi(
        data,
        [&](const uqpe::Dataset& sample) {
          const auto reps = uqpe::estimate_uqpe(sample, taus, grid, rule, silent);
          uqpe::Vector values(static_cast<uqpe::Index>(reps.size()));
          for (std::size_t i = 0; i < reps.size(); ++i)
            values[static_cast<uqpe::Index>(i)] = reps[i].estimate;
          return values;
        },
        opt.bootstrap, master.child(0).seed(), opt.alpha);
    for (std::size_t k = 0; k < baseline_kinds.size(); ++k) {
      const uqpe::EstimatorKind kind = baseline_kinds[k];
      baseline_inference[k] = uqpe::pairwise_bootstrap_multi(
          data,
          [&](const uqpe::Dataset& sample) {
            const double hb = uqpe::bandwidth(rule, sample.y);
            uqpe::Vector values(static_cast<uqpe::Index>(taus.size()));
            for (std::size_t i = 0; i < taus.size(); ++i) {
              if (kind == uqpe::EstimatorKind::rif_logit)
                values[static_cast<uqpe::Index>(i)] = uqpe::rif_logit_uqpe(sample, taus[i], hb).estimate;
              else
                values[static_cast<uqpe::Index>(i)] =
                    uqpe::rif_ols_uqpe(sample, taus[i],
                                       kind == uqpe::EstimatorKind::rif_ols1   ? 1
                                       : kind == uqpe::EstimatorKind::rif_ols2 ? 2
                                                                               : 3,
                                       hb)
                        .estimate;
            }
            return values;
          },
          opt.bootstrap, master.child(1 + k).seed(), opt.alpha);
    }
  }

  // assemble records
  json results = json::array();
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const auto& est = estimates[i];
    json record{{"estimator", opt.method},  {"tau", est.tau},
                {"estimate", est.estimate}, {"q_tau", est.q_tau},
                {"bandwidth", est.bandwidth}, {"method", uqpe::smoothing_method_name(est.method)},
                {"n", est.n},               {"grid_m", est.grid_m},
                {"boundary_hits", est.boundary_hits}};
    if (main_inference) record["inference"] = inference_to_json((*main_inference)[i]);
    results.push_back(std::move(record));
  }
  for (std::size_t k = 0; k < baseline_kinds.size(); ++k) {
    for (std::size_t i = 0; i < baseline_estimates[k].size(); ++i) {
      const auto& rif = baseline_estimates[k][i];
      json record{{"estimator", uqpe::rif_variant_name(rif.variant)},
                  {"variant", uqpe::rif_variant_name(rif.variant)},
                  {"tau", rif.tau},
                  {"estimate", rif.estimate},
                  {"q_tau", rif.q_tau},
                  {"bandwidth", h},
                  {"density_at_q", rif.density_at_q},
                  {"n", data.n()}};
      if (opt.bootstrap > 0) record["inference"] = inference_to_json(baseline_inference[k][i]);
      results.push_back(std::move(record));
    }
  }

  std::ofstream file;
  std::ostream& out = open_output(opt.io.out_path, file);
  if (opt.format == "json") {
    json document{{"config", config}, {"results", results}};
    out << document.dump(2) << '\n';
  } else if (opt.format == "csv") {
    out << "# " << config.dump() << '\n';
    out << "estimator,tau,estimate,q_tau,bandwidth,method,n,grid_m,boundary_hits,"
           "se,gaussian_lo,gaussian_hi,percentile_lo,percentile_hi,B,density_at_q\n";
    for (const auto& record : results) {
      out << record["estimator"].get<std::string>() << ',' << format_double(record["tau"]) << ','
          << format_double(record["estimate"]) << ',' << format_double(record["q_tau"]) << ','
          << format_double(record["bandwidth"]) << ','
          << (record.contains("method") ? record["method"].get<std::string>() : std::string()) << ','
          << record["n"].get<long>() << ','
          << (record.contains("grid_m") ? std::to_string(record["grid_m"].get<int>()) : std::string())
          << ','
          << (record.contains("boundary_hits")
                  ? std::to_string(record["boundary_hits"].get<long>())
                  : std::string())
          << ',';
      if (record.contains("inference")) {
        const auto& inf = record["inference"];
        out << format_double(inf["se"]) << ',' << format_double(inf["gaussian_ci"][0]) << ','
            << format_double(inf["gaussian_ci"][1]) << ',' << format_double(inf["percentile_ci"][0])
            << ',' << format_double(inf["percentile_ci"][1]) << ',' << inf["B"].get<int>() << ',';
      } else {
        out << ",,,,,,";
      }
      out << (record.contains("density_at_q") ? format_double(record["density_at_q"]) : std::string())
          << '\n';
    }
  } else {
    uqpe::raise(uqpe::ErrorCode::InvalidArgument, "--format must be json or csv");
  }
  return 0;
}

// ---------------------------------------------------------------- simulate

uqpe::ExperimentConfig build_experiment(const SimulateOptions& opt) {
  uqpe::ExperimentConfig config;
  if (opt.dgp == "loc-normal") {
    config.theta = 0.0;
  } else if (opt.dgp == "loc-chi2") {
    config.theta = 0.0;
    config.u_dist = uqpe::UDist::chi2_standardized;
  } else if (opt.dgp == "locscale-normal") {
    config.theta = 1.0;
  } else if (opt.dgp == "locscale-chi2") {
    config.theta = 1.0;
    config.u_dist = uqpe::UDist::chi2_standardized;
  } else if (opt.dgp == "locscale-normal-w") {
    config.theta = 1.0;
    config.extra = uqpe::ExtraCovariate::independent;
  } else if (opt.dgp == "locscale-normal-wcorr") {
    config.theta = 1.0;
    config.extra = uqpe::ExtraCovariate::correlated;
  } else {
    uqpe::raise(uqpe::ErrorCode::InvalidArgument,
                "--dgp must be one of loc-normal, loc-chi2, locscale-normal, locscale-chi2, "
                "locscale-normal-w, locscale-normal-wcorr");
  }
  config.sample_sizes = opt.sample_sizes;
  if (config.sample_sizes.empty())
    config.sample_sizes = opt.coverage ? std::vector<uqpe::Index>{500, 1000}
                                       : std::vector<uqpe::Index>{250, 500, 2500, 5000};
  config.taus = opt.taus;
  config.reps = opt.reps;
  config.seed = opt.seed;
  config.grid_size = opt.grid;
  config.bandwidth_rule = {opt.bandwidth_constant, parse_exponent(opt.bandwidth_exponent)};
  config.coverage = opt.coverage;
  config.bootstrap_B = opt.bootstrap_B;
  config.alpha = opt.alpha;
  config.estimators.clear();
  if (opt.coverage) {
    config.estimators = {uqpe::EstimatorKind::nw};
  } else {
    for (const auto& name : opt.estimators) {
      const auto kind = uqpe::parse_estimator_kind(name);
      if (!kind) uqpe::raise(uqpe::ErrorCode::InvalidArgument, "unknown estimator '" + name + "'");
      config.estimators.push_back(*kind);
    }
  }
  return config;
}

int run_simulate(const SimulateOptions& opt) {
  resolve_threads(opt.threads);
  uqpe::ExperimentConfig config = build_experiment(opt);

  json echo{{"command", "simulate"},
            {"dgp", opt.dgp},
            {"n", config.sample_sizes},
            {"reps", config.reps},
            {"tau", config.taus},
            {"estimators", opt.coverage ? std::vector<std::string>{"nw"} : opt.estimators},
            {"grid_m", opt.grid},
            {"bandwidth_constant", opt.bandwidth_constant},
            {"bandwidth_exponent", opt.bandwidth_exponent},
            {"sweep_bandwidth", opt.sweep_bandwidth},
            {"coverage", opt.coverage},
            {"B", opt.bootstrap_B},
            {"alpha", opt.alpha},
            {"seed", opt.seed}};

  const std::string out_path = opt.out_path.empty() ? std::string("simulation.csv") : opt.out_path;

  if (opt.sweep_bandwidth) {
    // one run per exponent on identical draws; estimator names carry the rate
    uqpe::SimulationReport merged;
    static const std::pair<const char*, double> rates[] = {
        {"n^-1/4", 0.25}, {"n^-1/5", 0.2}, {"n^-1/6", 1.0 / 6.0}};
    for (const auto& [label, exponent] : rates) {
      uqpe::ExperimentConfig swept = config;
      swept.bandwidth_rule.exponent = exponent;
      const uqpe::SimulationReport report = uqpe::run_experiment(swept);
      for (const auto& [key, cell] : report.cells)
        merged.cells.emplace(std::make_tuple(std::get<0>(key) + "@" + label, std::get<1>(key),
                                             std::get<2>(key)),
                             cell);
    }
    merged.config = config;
    uqpe::write_report_csv(merged, out_path, echo.dump());
    return 0;
  }

  const uqpe::SimulationReport report = uqpe::run_experiment(config);
  if (opt.coverage)
    uqpe::write_coverage_csv(report, out_path, echo.dump());
  else
    uqpe::write_report_csv(report, out_path, echo.dump());
  return 0;
}

// ------------------------------------------------------------------- match

int run_match(const MatchOptions& opt) {
  resolve_threads(opt.io.threads);
  uqpe::CsvSelection selection{opt.io.outcome, opt.io.target, opt.io.controls, opt.io.drop_na};
  const uqpe::Dataset data = uqpe::load_csv(opt.io.data_path, selection);

  const int m = opt.io.grid > 0 ? opt.io.grid : uqpe::paired_grid_size(data.n());
  const uqpe::QuantileGrid grid = uqpe::default_grid(m);
  const uqpe::QuantileProcessFit fit = uqpe::fit_process(data, grid);
  const uqpe::Matrix curves = uqpe::evaluate_curves(fit, data);

  std::vector<double> taus = opt.taus;
  std::sort(taus.begin(), taus.end());
  std::vector<uqpe::MatchResult> matches;
  for (double tau : taus) {
    const double q_tau = uqpe::unconditional_quantile(data.y, tau);
    matches.push_back(uqpe::match_curves(curves, fit, tau, q_tau));
    if (matches.back().boundary_hits >
        uqpe::kBoundaryWarningShare * static_cast<double>(data.n()))
      std::cerr << "match: warning: " << matches.back().boundary_hits << " of " << data.n()
                << " observations clamped at tau=" << tau
                << "; consider a finer or wider quantile grid\n";
  }

  json echo{{"command", "match"},
            {"data", opt.io.data_path},
            {"outcome", opt.io.outcome},
            {"target", opt.io.target},
            {"controls", opt.io.controls},
            {"tau", taus},
            {"grid_m", m},
            {"seed", opt.io.seed},
            {"n", data.n()}};

  const std::string out_path = opt.io.out_path.empty() ? std::string("match.csv") : opt.io.out_path;
  uqpe::write_match_csv(data, matches, out_path, echo.dump());
  return 0;
}

void add_common_io(CLI::App* cmd, CommonIo& io, bool needs_data) {
  if (needs_data) {
    cmd->add_option("--data", io.data_path, "input CSV file")->required();
    cmd->add_option("--outcome", io.outcome, "outcome column name")->required();
    cmd->add_option("--target", io.target, "target covariate column name")->required();
    cmd->add_option("--controls", io.controls, "control column names")->delimiter(',');
    cmd->add_flag("--drop-na", io.drop_na, "drop rows with missing values instead of erroring");
  }
  cmd->add_option("--grid", io.grid, "quantile grid size m (0 = match sample size)");
  cmd->add_option("--out", io.out_path, "output file (default: stdout or command default)");
  cmd->add_option("--threads", io.threads, "worker threads (0 = UQPE_THREADS env or all cores)");
  cmd->add_option("--seed", io.seed, "64-bit master seed");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unconditional quantile partial effects from quantile regression processes"};
  app.require_subcommand(1);

  EstimateOptions est;
  CLI::App* estimate = app.add_subcommand("estimate", "estimate UQPE (and baselines) from a CSV");
  add_common_io(estimate, est.io, true);
  estimate->add_option("--tau", est.taus, "quantile levels")->delimiter(',');
  estimate->add_option("--bandwidth-constant", est.bandwidth_constant, "bandwidth rule constant");
  estimate->add_option("--bandwidth-exponent", est.bandwidth_exponent, "1/4, 1/5, 1/6 or decimal");
  estimate->add_option("--method", est.method, "nw or local-linear");
  estimate->add_flag("--ll-literal", est.ll_literal, "evaluate local-linear fit as a0 + a1*q_tau");
  estimate->add_option("--baselines", est.baselines,
                       "rif-ols-linear, rif-ols-quadratic, rif-ols-cubic, rif-logit, or all")
      ->delimiter(',');
  estimate->add_option("--bootstrap", est.bootstrap, "bootstrap replicates B (0 disables)");
  estimate->add_option("--alpha", est.alpha, "CI level alpha");
  estimate->add_option("--format", est.format, "json or csv");
  estimate->add_option("--export-process", est.export_process, "write the coefficient process CSV here");

  SimulateOptions sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo experiments on built-in DGPs");
  simulate->add_option("--dgp", sim.dgp,
                       "loc-normal, loc-chi2, locscale-normal, locscale-chi2, locscale-normal-w, "
                       "locscale-normal-wcorr");
  simulate->add_option("--n", sim.sample_sizes, "sample sizes")->delimiter(',');
  simulate->add_option("--reps", sim.reps, "Monte Carlo replications");
  simulate->add_option("--taus,--tau", sim.taus, "quantile levels")->delimiter(',');
  simulate->add_option("--estimators", sim.estimators, "estimators to evaluate")->delimiter(',');
  simulate->add_option("--grid", sim.grid, "quantile grid size m (0 = pair with n)");
  simulate->add_option("--bandwidth-constant", sim.bandwidth_constant, "bandwidth rule constant");
  simulate->add_option("--bandwidth-exponent", sim.bandwidth_exponent, "1/4, 1/5, 1/6 or decimal");
  simulate->add_flag("--sweep-bandwidth", sim.sweep_bandwidth, "run exponents 1/4, 1/5, 1/6");
  simulate->add_flag("--coverage", sim.coverage, "bootstrap coverage experiment (nw)");
  simulate->add_option("--B", sim.bootstrap_B, "bootstrap replicates per replication");
  simulate->add_option("--alpha", sim.alpha, "CI level alpha");
  simulate->add_option("--out", sim.out_path, "output CSV (default simulation.csv)");
  simulate->add_option("--threads", sim.threads, "worker threads");
  simulate->add_option("--seed", sim.seed, "64-bit master seed");

  MatchOptions match;
  CLI::App* match_cmd = app.add_subcommand("match", "export matched quantile levels and slopes");
  add_common_io(match_cmd, match.io, true);
  match_cmd->add_option("--tau", match.taus, "quantile levels")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e); // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*estimate) return run_estimate(est);
    if (*simulate) return run_simulate(sim);
    if (*match_cmd) return run_match(match);
  } catch (const uqpe::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return uqpe::is_validation_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
