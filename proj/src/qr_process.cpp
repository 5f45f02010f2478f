#include "uqpe/qr_process.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cstdio>
#include <fstream>

#include "uqpe/parallel.hpp"

namespace uqpe {

QuantileGrid default_grid(int m) {
  if (m < 3) raise(ErrorCode::GridTooSmall, "default_grid: need m >= 3, got " + std::to_string(m));
  QuantileGrid grid;
  grid.m = m;
  grid.levels.resize(m);
  for (int j = 1; j <= m; ++j) grid.levels[j - 1] = static_cast<double>(j) / (m + 1);
  grid.epsilon = 1.0 / (m + 1);
  return grid;
}

int default_grid_size(Index n) { return n <= 2500 ? 99 : 199; }

int paired_grid_size(Index n) {
  static constexpr Index sizes[] = {250, 500, 2500, 5000};
  static constexpr int grids[] = {9, 24, 99, 199};
  int best = 0;
  Index best_distance = -1;
  for (int k = 0; k < 4; ++k) {
    const Index distance = std::abs(n - sizes[k]);
    if (best_distance < 0 || distance < best_distance ||
        (distance == best_distance && sizes[k] > sizes[best])) {
      best = k;
      best_distance = distance;
    }
  }
  return grids[best];
}

namespace {

void validate_grid(const QuantileGrid& grid) {
  if (grid.m < 3 || grid.levels.size() != grid.m)
    raise(ErrorCode::GridTooSmall, "grid: need at least 3 levels");
  if (!(grid.epsilon > 0.0 && grid.epsilon < 0.5))
    raise(ErrorCode::InvalidArgument, "grid: epsilon must lie in (0, 1/2)");
  if (grid.levels[0] < grid.epsilon - 1e-12 || grid.levels[grid.m - 1] > 1.0 - grid.epsilon + 1e-12)
    raise(ErrorCode::InvalidArgument, "grid: levels must lie in [epsilon, 1-epsilon]");
  const double spacing = grid.spacing();
  for (int j = 1; j < grid.m; ++j) {
    const double step = grid.levels[j] - grid.levels[j - 1];
    if (step <= 0.0) raise(ErrorCode::InvalidArgument, "grid: levels must be strictly increasing");
    if (std::abs(step - spacing) > 1e-9)
      raise(ErrorCode::InvalidArgument, "grid: levels must be uniformly spaced");
  }
}

} // namespace

QuantileProcessFit fit_process(const Dataset& data, const QuantileGrid& grid, const QrOptions& options) {
  validate(data);
  validate_grid(grid);
  {
    Eigen::ColPivHouseholderQR<Matrix> qr(data.x);
    if (qr.rank() < data.d())
      raise(ErrorCode::RankDeficientDesign, "fit_process: design matrix is numerically rank deficient");
  }

  QuantileProcessFit fit;
  fit.grid = grid;
  fit.target_index = data.target_index;
  fit.betas.resize(grid.m, data.d());

  parallel_for(static_cast<std::size_t>(grid.m), [&](std::size_t j) {
    const double eta = grid.levels[static_cast<Index>(j)];
    try {
      QrFit single = fit_quantile_design(data.x, data.y, eta, options, false);
      fit.betas.row(static_cast<Index>(j)) = single.beta.transpose();
    } catch (const Error& e) {
      // keep the original code, attach the offending level
      throw Error(e.code(), "fit_process at eta=" + std::to_string(eta) + ": " + e.what());
    }
  });

  const Matrix raw = data.x * fit.betas.transpose(); // n x m
  fit.crossing_count = count_crossings(raw);
  fit.rearranged = fit.crossing_count > 0;
  return fit;
}

long count_crossings(const Matrix& raw_curves) {
  long count = 0;
  for (Index i = 0; i < raw_curves.rows(); ++i)
    for (Index j = 1; j < raw_curves.cols(); ++j)
      if (raw_curves(i, j) < raw_curves(i, j - 1)) ++count;
  return count;
}

void rearrange_rows(Matrix& curves) {
  for (Index i = 0; i < curves.rows(); ++i) {
    Eigen::RowVectorXd row = curves.row(i);
    std::sort(row.data(), row.data() + row.size());
    curves.row(i) = row;
  }
}

Matrix evaluate_curves_at(const QuantileProcessFit& fit, const Eigen::Ref<const Matrix>& x) {
  if (x.cols() != fit.betas.cols())
    raise(ErrorCode::GridMismatch, "evaluate_curves: design has " + std::to_string(x.cols()) +
                                       " columns, process fit expects " + std::to_string(fit.betas.cols()));
  Matrix curves = x * fit.betas.transpose();
  if (count_crossings(curves) > 0) rearrange_rows(curves);
  return curves;
}

Matrix evaluate_curves(const QuantileProcessFit& fit, const Dataset& data) {
  return evaluate_curves_at(fit, data.x);
}

void write_process_csv(const QuantileProcessFit& fit, const std::vector<std::string>& column_names,
                       const std::string& path, const std::string& config_echo) {
  if (column_names.size() != static_cast<std::size_t>(fit.betas.cols()))
    raise(ErrorCode::InvalidArgument, "write_process_csv: one name per coefficient required");
  std::ofstream out(path);
  if (!out) raise(ErrorCode::InvalidArgument, "write_process_csv: cannot open '" + path + "'");
  if (!config_echo.empty()) out << "# " << config_echo << '\n';
  out << "eta";
  for (const auto& name : column_names) out << ',' << name;
  out << '\n';
  char buffer[64];
  for (int j = 0; j < fit.grid.m; ++j) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", fit.grid.levels[j]);
    out << buffer;
    for (Index k = 0; k < fit.betas.cols(); ++k) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", fit.betas(j, k));
      out << ',' << buffer;
    }
    out << '\n';
  }
}

} // namespace uqpe
