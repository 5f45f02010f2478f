#include "uqpe/matching.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace uqpe {

MatchResult match_curves(const Matrix& monotone_curves, const QuantileProcessFit& fit, double tau,
                         double q_tau) {
  if (monotone_curves.cols() != fit.grid.m)
    raise(ErrorCode::GridMismatch, "match: curve columns and grid size differ");
  const Index n = monotone_curves.rows();
  const int m = fit.grid.m;

  MatchResult result;
  result.tau = tau;
  result.q_tau = q_tau;
  result.xi.resize(n);
  result.matched_slope.resize(n);
  result.grid_row.resize(static_cast<std::size_t>(n));

  const Vector slopes = fit.slope_process();
  for (Index i = 0; i < n; ++i) {
    int row;
    if (q_tau < monotone_curves(i, 0)) {
      // below the lowest fitted curve: level epsilon, slope from the first row
      row = 0;
      result.xi[i] = fit.grid.epsilon;
      ++result.boundary_hits;
    } else if (monotone_curves(i, m - 1) <= q_tau) {
      row = m - 1;
      result.xi[i] = fit.grid.levels[m - 1];
      ++result.boundary_hits;
    } else {
      // largest j with curve(i,j) <= q_tau; monotone rows make it unique
      int lo = 0;
      int hi = m - 1; // curve(i,hi) > q_tau here
      while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (monotone_curves(i, mid) <= q_tau)
          lo = mid;
        else
          hi = mid;
      }
      row = lo;
      result.xi[i] = fit.grid.levels[row];
    }
    result.grid_row[static_cast<std::size_t>(i)] = row;
    result.matched_slope[i] = slopes[row];
  }
  return result;
}

MatchResult match_observations(const QuantileProcessFit& fit, const Dataset& data, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    raise(ErrorCode::InvalidArgument, "match: tau must lie in (0,1)");
  if (data.d() != fit.betas.cols())
    raise(ErrorCode::GridMismatch, "match: dataset and process fit disagree on the design dimension");
  const Matrix curves = evaluate_curves(fit, data);
  const double q_tau = unconditional_quantile(data.y, tau);
  return match_curves(curves, fit, tau, q_tau);
}

double oracle_xi_location_scale(double alpha0, double alpha1, double theta, UDist u_dist, double q_tau,
                                double x1) {
  const double scale = 1.0 + theta * x1;
  if (scale <= 0.0)
    raise(ErrorCode::ScaleNonPositive,
          "oracle_xi: 1 + theta*x1 = " + std::to_string(scale) + " is not positive");
  return u_dist_cdf(u_dist, (q_tau - alpha0 - alpha1 * x1) / scale);
}

void write_match_csv(const Dataset& data, const std::vector<MatchResult>& matches, const std::string& path,
                     const std::string& config_echo) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::InvalidArgument, "write_match_csv: cannot open '" + path + "'");
  if (!config_echo.empty()) out << "# " << config_echo << '\n';
  out << "tau," << data.target_name() << ",xi,matched_slope\n";
  char buffer[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    out << buffer << sep;
  };
  for (const auto& match : matches) {
    if (match.xi.size() != data.n())
      raise(ErrorCode::GridMismatch, "write_match_csv: match and dataset row counts differ");
    for (Index i = 0; i < data.n(); ++i) {
      put(match.tau, ',');
      put(data.x(i, data.target_index), ',');
      put(match.xi[i], ',');
      put(match.matched_slope[i], '\n');
    }
  }
}

} // namespace uqpe
