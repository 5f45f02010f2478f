#include "uqpe/rif.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>

#include "uqpe/qr_core.hpp"

namespace uqpe {

const char* rif_variant_name(RifVariant variant) {
  switch (variant) {
    case RifVariant::ols_linear: return "rif-ols-linear";
    case RifVariant::ols_quadratic: return "rif-ols-quadratic";
    case RifVariant::ols_cubic: return "rif-ols-cubic";
    case RifVariant::logit: return "rif-logit";
  }
  return "rif";
}

Vector compute_rif(const Eigen::Ref<const Vector>& y, double tau, double h, const KernelSpec& spec) {
  if (!(tau > 0.0 && tau < 1.0)) raise(ErrorCode::InvalidArgument, "compute_rif: tau must lie in (0,1)");
  const double q = unconditional_quantile(y, tau);
  const double density = kde_at(y, q, h, spec);
  if (density <= 1e-12)
    raise(ErrorCode::ZeroDensity, "compute_rif: estimated density at the quantile is zero");
  Vector rif(y.size());
  for (Index i = 0; i < y.size(); ++i) rif[i] = rif_value(y[i], q, tau, density);
  return rif;
}

namespace {

// [1, powers of each non-intercept covariate up to degree], no cross terms.
Matrix polynomial_design(const Dataset& data, int degree) {
  const Index n = data.n();
  const Index covariates = data.d() - 1;
  Matrix design(n, 1 + covariates * degree);
  design.col(0).setOnes();
  Index column = 1;
  for (Index j = 1; j < data.d(); ++j) {
    Vector power = data.x.col(j);
    for (int p = 1; p <= degree; ++p) {
      design.col(column++) = power;
      if (p < degree) power.array() *= data.x.col(j).array();
    }
  }
  return design;
}

} // namespace

RifEstimate rif_ols_uqpe(const Dataset& data, double tau, int degree, double h) {
  if (degree < 1 || degree > 3)
    raise(ErrorCode::InvalidArgument, "rif_ols: polynomial degree must be 1, 2, or 3");
  const double q = unconditional_quantile(data.y, tau);
  const double density = kde_at(data.y, q, h);
  if (density <= 1e-12) raise(ErrorCode::ZeroDensity, "rif_ols: estimated density at the quantile is zero");

  Vector rif(data.n());
  for (Index i = 0; i < data.n(); ++i) rif[i] = rif_value(data.y[i], q, tau, density);

  const Matrix design = polynomial_design(data, degree);
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < design.cols())
    raise(ErrorCode::RankDeficientDesign, "rif_ols: polynomial design is rank deficient");
  const Vector gamma = qr.solve(rif);

  // Sample-average derivative of the fitted polynomial in the target.
  const Index covariate_slot = data.target_index - 1; // position among non-intercept covariates
  const Index base = 1 + covariate_slot * degree;
  double derivative_sum = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const double value = data.x(i, data.target_index);
    double derivative = 0.0;
    double power = 1.0; // value^(p-1)
    for (int p = 1; p <= degree; ++p) {
      derivative += static_cast<double>(p) * gamma[base + (p - 1)] * power;
      power *= value;
    }
    derivative_sum += derivative;
  }

  RifEstimate estimate;
  estimate.tau = tau;
  estimate.estimate = derivative_sum / static_cast<double>(data.n());
  estimate.variant = degree == 1   ? RifVariant::ols_linear
                     : degree == 2 ? RifVariant::ols_quadratic
                                   : RifVariant::ols_cubic;
  estimate.density_at_q = density;
  estimate.q_tau = q;
  return estimate;
}

namespace {

double logistic(double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); }

// log L = sum v log p + (1 - v) log(1 - p), computed through log1p(exp(-|m|))
// with m the signed margin to stay finite for large |x'gamma|.
double log_likelihood(const Eigen::Ref<const Matrix>& x, const std::vector<char>& response,
                      const Vector& gamma) {
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    const double margin = (response[static_cast<std::size_t>(i)] ? 1.0 : -1.0) * x.row(i).dot(gamma);
    total += margin >= 0.0 ? -std::log1p(std::exp(-margin)) : margin - std::log1p(std::exp(margin));
  }
  return total;
}

} // namespace

LogitFit fit_logit(const Eigen::Ref<const Matrix>& x, const std::vector<char>& response) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (static_cast<Index>(response.size()) != n)
    raise(ErrorCode::InvalidArgument, "fit_logit: response and design row counts differ");

  bool any_one = false, any_zero = false;
  for (char v : response) (v ? any_one : any_zero) = true;
  if (!any_one || !any_zero)
    raise(ErrorCode::DegenerateIndicator, "fit_logit: the indicator takes a single value");

  LogitFit fit;
  fit.gamma = Vector::Zero(d);
  double loglik = log_likelihood(x, response, fit.gamma);
  fit.loglik_trace.push_back(loglik);

  const double gradient_tolerance = 1e-8;
  for (fit.iterations = 1; fit.iterations <= 100; ++fit.iterations) {
    Vector gradient = Vector::Zero(d);
    Matrix hessian = Matrix::Zero(d, d);
    for (Index i = 0; i < n; ++i) {
      const double p = logistic(x.row(i).dot(fit.gamma));
      const double v = response[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
      gradient += (v - p) * x.row(i).transpose();
      hessian.noalias() += p * (1.0 - p) * x.row(i).transpose() * x.row(i);
    }
    gradient /= static_cast<double>(n);
    hessian /= static_cast<double>(n);

    if (gradient.cwiseAbs().maxCoeff() <= gradient_tolerance) return fit;

    Eigen::LDLT<Matrix> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      raise(ErrorCode::SeparationDetected,
            "fit_logit: information matrix collapsed (fitted probabilities at 0/1)");
    Vector step = ldlt.solve(gradient);

    // step halving keeps the likelihood nondecreasing
    double scale = 1.0;
    Vector candidate;
    double candidate_loglik;
    for (int half = 0; half < 40; ++half, scale *= 0.5) {
      candidate = fit.gamma + scale * step;
      candidate_loglik = log_likelihood(x, response, candidate);
      if (candidate_loglik >= loglik) break;
    }
    if (candidate_loglik < loglik)
      raise(ErrorCode::SolverDivergence, "fit_logit: step halving failed to improve the likelihood");
    fit.gamma = candidate;
    loglik = candidate_loglik;
    fit.loglik_trace.push_back(loglik);

    // Diverging coefficients with every observation far from the boundary:
    // the data are perfectly separated and the MLE runs to infinity.
    double min_margin = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      const double margin = (response[static_cast<std::size_t>(i)] ? 1.0 : -1.0) * x.row(i).dot(fit.gamma);
      min_margin = std::min(min_margin, margin);
    }
    if (min_margin > 12.0)
      raise(ErrorCode::SeparationDetected, "fit_logit: perfect separation (all margins exceed 12)");
  }
  raise(ErrorCode::SolverDivergence, "fit_logit: no convergence after 100 Newton iterations");
}

double logit_average_marginal_effect(const Eigen::Ref<const Matrix>& x,
                                     const Eigen::Ref<const Vector>& gamma, Index target) {
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    const double p = logistic(x.row(i).dot(gamma));
    total += p * (1.0 - p);
  }
  return total / static_cast<double>(x.rows()) * gamma[target];
}

RifEstimate rif_logit_uqpe(const Dataset& data, double tau, double h) {
  const double q = unconditional_quantile(data.y, tau);
  const double density = kde_at(data.y, q, h);
  if (density <= 1e-12)
    raise(ErrorCode::ZeroDensity, "rif_logit: estimated density at the quantile is zero");

  std::vector<char> above(static_cast<std::size_t>(data.n()));
  for (Index i = 0; i < data.n(); ++i) above[static_cast<std::size_t>(i)] = data.y[i] > q ? 1 : 0;

  const LogitFit logit = fit_logit(data.x, above);

  RifEstimate estimate;
  estimate.tau = tau;
  estimate.estimate = logit_average_marginal_effect(data.x, logit.gamma, data.target_index) / density;
  estimate.variant = RifVariant::logit;
  estimate.density_at_q = density;
  estimate.q_tau = q;
  return estimate;
}

} // namespace uqpe
