#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "uqpe/matching.hpp"
#include "uqpe/rng.hpp"
#include "uqpe/simulation.hpp"

using namespace uqpe;

namespace {

// Process fit with prescribed coefficient rows (no estimation), for tests
// that isolate the matching rule.
QuantileProcessFit synthetic_fit(const QuantileGrid& grid, const Matrix& betas, Index target) {
  QuantileProcessFit fit;
  fit.grid = grid;
  fit.betas = betas;
  fit.target_index = target;
  return fit;
}

} // namespace

TEST_SUITE("matching") {
  TEST_CASE("intercept-only curves match every observation to the same level") {
    // slopes all zero: curve_j = Q_Y(eta_j) for every row
    const QuantileGrid grid = default_grid(9);
    Matrix betas(9, 2);
    for (int j = 0; j < 9; ++j) {
      betas(j, 0) = 10.0 + j; // increasing intercepts 10..18
      betas(j, 1) = 0.0;
    }
    const QuantileProcessFit fit = synthetic_fit(grid, betas, 1);
    Matrix x(5, 2);
    x.col(0).setOnes();
    x.col(1) << -2, -1, 0, 1, 2;
    const Matrix curves = evaluate_curves_at(fit, x);
    // q between the rows for eta_5 = 0.5 (curve 14) and eta_6 (curve 15)
    const MatchResult match = match_curves(curves, fit, 0.5, 14.3);
    for (Index i = 0; i < 5; ++i) {
      CHECK(match.xi[i] == doctest::Approx(0.5));
      CHECK(match.grid_row[static_cast<std::size_t>(i)] == 4);
      CHECK(match.matched_slope[i] == 0.0);
    }
    CHECK(match.boundary_hits == 0);
  }

  TEST_CASE("three-branch rule hits both boundaries") {
    const QuantileGrid grid = default_grid(3); // {0.25, 0.5, 0.75}
    Matrix betas(3, 2);
    betas << 10, 0, 11, 0, 12, 0;
    const QuantileProcessFit fit = synthetic_fit(grid, betas, 1);
    Matrix x = Matrix::Ones(2, 2);
    const Matrix curves = evaluate_curves_at(fit, x);

    const MatchResult low = match_curves(curves, fit, 0.5, 9.0);
    CHECK(low.xi[0] == doctest::Approx(grid.epsilon)); // q below the lowest curve
    CHECK(low.grid_row[0] == 0);
    CHECK(low.boundary_hits == 2);

    const MatchResult high = match_curves(curves, fit, 0.5, 12.0); // curve(m) <= q
    CHECK(high.xi[0] == doctest::Approx(0.75));
    CHECK(high.grid_row[0] == 2);
    CHECK(high.boundary_hits == 2);

    const MatchResult at_level = match_curves(curves, fit, 0.5, 11.0); // ties go to the bracket
    CHECK(at_level.xi[0] == doctest::Approx(0.5));
    CHECK(at_level.boundary_hits == 0);
  }

  TEST_CASE("true-parameter location model matches the closed form at the median") {
    // betas(eta) = (1 + Phi^-1(eta), 1): conditional law y|x ~ N(1 + x, 1)
    const QuantileGrid grid = default_grid(99);
    Matrix betas(99, 2);
    for (int j = 0; j < 99; ++j) {
      betas(j, 0) = 1.0 + normal_quantile(grid.levels[j]);
      betas(j, 1) = 1.0;
    }
    const QuantileProcessFit fit = synthetic_fit(grid, betas, 1);
    Matrix x(1, 2);
    x << 1.0, 10.0;
    const Matrix curves = evaluate_curves_at(fit, x);
    // population q at tau = 0.5 is 11 (y ~ N(11, 2)); xi = Phi(0) = 0.5
    const MatchResult match = match_curves(curves, fit, 0.5, 11.0);
    CHECK(match.xi[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(oracle_xi_location_scale(1.0, 1.0, 0.0, UDist::normal, 11.0, 10.0) ==
          doctest::Approx(0.5).epsilon(1e-14));
  }

  TEST_CASE("theta=1 matching at tau=0.25 agrees with the closed form") {
    // Q_Y[0.25] = 3.547141 for y = (1+x)(1+u) (frozen from an independent
    // quadrature + 2e7-draw simulation cross-check)
    const double q25 = 3.547141;
    const double xi_true = oracle_xi_location_scale(1.0, 1.0, 1.0, UDist::normal, q25, 10.0);
    CHECK(xi_true == doctest::Approx(normal_cdf((q25 - 11.0) / 11.0)).epsilon(1e-14));
    CHECK(xi_true == doctest::Approx(0.2490).epsilon(1e-3));

    // estimated matching on a large draw lands within grid resolution
    const Dataset data = draw_dgp({1.0, UDist::normal, ExtraCovariate::none, 5000, 11});
    const QuantileProcessFit fit = fit_process(data, default_grid(199));
    const Matrix curves = evaluate_curves(fit, data);
    const double q_hat = unconditional_quantile(data.y, 0.25);
    const MatchResult match = match_curves(curves, fit, 0.25, q_hat);
    // find an observation with x close to 10
    Index pick = 0;
    double best = 1e9;
    for (Index i = 0; i < data.n(); ++i) {
      const double gap = std::abs(data.x(i, 1) - 10.0);
      if (gap < best) {
        best = gap;
        pick = i;
      }
    }
    CHECK(match.xi[pick] == doctest::Approx(xi_true).epsilon(0.12));
  }

  TEST_CASE("oracle guards and formula arithmetic") {
    CHECK(oracle_xi_location_scale(1, 1, 0, UDist::normal, 11.0, 11.0) ==
          doctest::Approx(normal_cdf(-1.0)).epsilon(1e-14));
    CHECK(oracle_xi_location_scale(1, 1, 0, UDist::normal, 11.0, 11.0) ==
          doctest::Approx(0.1587).epsilon(1e-3));
    CHECK_THROWS_WITH_AS(oracle_xi_location_scale(1, 1, 1.0, UDist::normal, 5.0, -1.0),
                         doctest::Contains("ScaleNonPositive"), Error);
  }

  TEST_CASE("xi is componentwise nondecreasing in tau") {
    const Dataset data = draw_dgp({1.0, UDist::normal, ExtraCovariate::none, 600, 5});
    const QuantileProcessFit fit = fit_process(data, default_grid(24));
    const Matrix curves = evaluate_curves(fit, data);
    Vector previous;
    for (double tau : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const MatchResult match = match_curves(curves, fit, tau, unconditional_quantile(data.y, tau));
      if (previous.size() > 0)
        for (Index i = 0; i < data.n(); ++i) CHECK(match.xi[i] >= previous[i]);
      previous = match.xi;
    }
  }

  TEST_CASE("matched slopes always come from the fitted slope process") {
    const Dataset data = draw_dgp({1.0, UDist::chi2_standardized, ExtraCovariate::none, 300, 23});
    const QuantileProcessFit fit = fit_process(data, default_grid(9));
    const MatchResult match = match_observations(fit, data, 0.4);
    std::set<double> slopes(fit.betas.col(1).begin(), fit.betas.col(1).end());
    for (Index i = 0; i < data.n(); ++i)
      CHECK(slopes.count(match.matched_slope[i]) == 1);
  }

  TEST_CASE("dimension mismatch is rejected") {
    const Dataset data = draw_dgp({0.0, UDist::normal, ExtraCovariate::none, 100, 2});
    const QuantileProcessFit fit = fit_process(data, default_grid(9));
    const Dataset wider = draw_dgp({0.0, UDist::normal, ExtraCovariate::independent, 100, 2});
    CHECK_THROWS_WITH_AS(match_observations(fit, wider, 0.5), doctest::Contains("GridMismatch"),
                         Error);
  }
}
