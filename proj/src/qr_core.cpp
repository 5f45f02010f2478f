#include "uqpe/qr_core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace uqpe {

double mean_check_loss(const Eigen::Ref<const Vector>& residuals, double tau) {
  double total = 0.0;
  for (Index i = 0; i < residuals.size(); ++i) total += check_loss(residuals[i], tau);
  return total / static_cast<double>(residuals.size());
}

double subgradient_gap(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                       const Eigen::Ref<const Vector>& beta, double eta) {
  Vector score = Vector::Zero(x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double weight = eta - (y[i] <= x.row(i).dot(beta) ? 1.0 : 0.0);
    score += weight * x.row(i).transpose();
  }
  return (score / static_cast<double>(x.rows())).cwiseAbs().maxCoeff();
}

namespace {

constexpr double kStepFactor = 0.99995;

void require_full_rank(const Eigen::Ref<const Matrix>& x) {
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < x.cols())
    raise(ErrorCode::RankDeficientDesign,
          "fit_quantile: design matrix is numerically rank deficient (rank " + std::to_string(qr.rank()) +
              " of " + std::to_string(x.cols()) + "); collinear columns are not dropped automatically");
}

// Smallest positive step keeping v + delta * dv >= 0 interior, scaled by the
// usual fraction-to-boundary factor.
double boundary_step(const Vector& v, const Vector& dv) {
  double step = 1e20;
  for (Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) step = std::min(step, -v[i] / dv[i]);
  return std::min(kStepFactor * step, 1.0);
}

struct FnbResult {
  Vector beta;
  int iterations = 0;
  bool converged = false;
};

// Frisch-Newton barrier method on the bounded-variable dual
//   max y'a  s.t.  X'a = (1 - eta) X'1,  a in [0,1]^n,
// with Mehrotra's predictor-corrector; the negated equality multipliers are
// the regression coefficients. Mirrors the classical rqfnb recursion.
FnbResult frisch_newton(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y, double eta,
                        const QrOptions& options) {
  const Index n = x.rows();
  const Index d = x.cols();
  const double tol = options.tolerance;

  const Vector b_rhs = (1.0 - eta) * x.colwise().sum().transpose();
  const Vector c = -y;

  Vector a = Vector::Constant(n, 1.0 - eta); // dual box variables, interior start
  Vector multipliers = Eigen::LLT<Matrix>(x.transpose() * x).solve(x.transpose() * c);
  Vector s = c - x * multipliers;

  Vector z(n), w(n);
  for (Index i = 0; i < n; ++i) {
    const double bump = std::abs(s[i]) < tol ? tol : 0.0;
    z[i] = std::max(s[i], 0.0) + bump;
    w[i] = std::max(-s[i], 0.0) + bump;
  }
  Vector slack = Vector::Ones(n) - a;

  double gap = z.dot(a) + w.dot(slack);
  auto scale = [&]() { return 1.0 + std::abs(c.dot(a)); };

  FnbResult result;
  Matrix ada(d, d);
  Vector dvec(n), ds(n), dz(n), dw(n), da(n), dy(d), rhs(d), dr(n), u(n);

  while (gap > tol * scale() && result.iterations < options.max_iterations) {
    ++result.iterations;

    dvec.array() = (z.array() / a.array() + w.array() / slack.array()).inverse();
    ds = z - w;
    dz.array() = dvec.array() * ds.array(); // temporary reuse

    dy = b_rhs - x.transpose() * a + x.transpose() * dz;
    rhs = dy;
    ada.noalias() = x.transpose() * dvec.asDiagonal() * x;
    Eigen::LLT<Matrix> llt(ada);
    if (llt.info() != Eigen::Success) {
      result.beta = -multipliers;
      return result; // caller handles fallback
    }
    dy = llt.solve(dy);

    ds = x * dy - ds;
    da.array() = dvec.array() * ds.array();
    ds = -da;
    dz.array() = -z.array() * (da.array() / a.array() + 1.0);
    dw.array() = -w.array() * (ds.array() / slack.array() + 1.0);

    double deltap = std::min(boundary_step(a, da), boundary_step(slack, ds));
    double deltad = std::min(boundary_step(z, dz), boundary_step(w, dw));

    if (std::min(deltap, deltad) < 1.0) {
      // Mehrotra corrector
      double mu = z.dot(a) + w.dot(slack);
      const double g = mu + deltap * da.dot(z) + deltad * dz.dot(a) + deltap * deltad * da.dot(dz) +
                       deltap * ds.dot(w) + deltad * dw.dot(slack) + deltap * deltad * ds.dot(dw);
      mu = mu * std::pow(g / mu, 3) / (2.0 * static_cast<double>(n));

      dr.array() = dvec.array() * (mu * (slack.array().inverse() - a.array().inverse()) +
                           da.array() * dz.array() / a.array() - ds.array() * dw.array() / slack.array());
      dy = llt.solve(rhs + x.transpose() * dr);
      u = x * dy;

      for (Index i = 0; i < n; ++i) {
        const double dadz = da[i] * dz[i];
        const double dsdw = ds[i] * dw[i];
        da[i] = dvec[i] * (u[i] - z[i] + w[i]) - dr[i];
        ds[i] = -da[i];
        dz[i] = -z[i] + (mu - z[i] * da[i] - dadz) / a[i];
        dw[i] = -w[i] + (mu - w[i] * ds[i] - dsdw) / slack[i];
      }
      deltap = std::min(boundary_step(a, da), boundary_step(slack, ds));
      deltad = std::min(boundary_step(z, dz), boundary_step(w, dw));
    }

    a += deltap * da;
    slack += deltap * ds;
    multipliers += deltad * dy;
    z += deltad * dz;
    w += deltad * dw;
    gap = z.dot(a) + w.dot(slack);

    if (!multipliers.allFinite()) return result; // beta left empty on a blown-up iterate
  }

  result.beta = -multipliers;
  result.converged = gap <= tol * scale() && result.beta.allFinite();
  return result;
}

// Refine to a basic solution: an optimal quantile fit can always be chosen
// to interpolate d observations, so try the d smallest residuals and keep
// the interpolant whenever it does not worsen the objective.
void vertex_polish(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y, double eta,
                   QrFit& fit) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < d) return;

  Vector residuals = y - x * fit.beta;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index lhs, Index rhs) {
    const double la = std::abs(residuals[lhs]);
    const double ra = std::abs(residuals[rhs]);
    return la != ra ? la < ra : lhs < rhs;
  });

  // Greedy basis in residual order, skipping rows that are linearly
  // dependent on the ones already chosen (duplicated rows are common in
  // bootstrap resamples).
  Matrix basis(d, d);
  Matrix orthogonal(d, d);
  Vector rhs(d);
  Index chosen = 0;
  for (Index pos = 0; pos < n && chosen < d; ++pos) {
    const Index row = order[static_cast<std::size_t>(pos)];
    Vector direction = x.row(row).transpose();
    for (Index k = 0; k < chosen; ++k)
      direction -= orthogonal.row(k).dot(x.row(row)) * orthogonal.row(k).transpose();
    const double norm = direction.norm();
    if (norm <= 1e-10 * std::max(1.0, x.row(row).norm())) continue;
    basis.row(chosen) = x.row(row);
    orthogonal.row(chosen) = direction.transpose() / norm;
    rhs[chosen] = y[row];
    ++chosen;
  }
  if (chosen < d) return;
  // partial pivoting keeps the interpolation exact on integer-valued data
  // (unit multipliers), which a full-pivot permutation would spoil
  Vector candidate = Eigen::PartialPivLU<Matrix>(basis).solve(rhs);
  if (!candidate.allFinite()) return;

  const double objective = mean_check_loss(y - x * candidate, eta);
  if (objective <= fit.objective * (1.0 + 1e-12) + 1e-15) {
    fit.beta = candidate;
    fit.objective = objective;
  }
}

// Projected subgradient sweep used only when the interior point stalls on a
// design that passed the rank check; keeps the best iterate seen.
void subgradient_polish(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y, double eta,
                        QrFit& fit) {
  const double n = static_cast<double>(x.rows());
  Vector beta = fit.beta;
  Vector best = beta;
  double best_objective = fit.objective;
  const double step0 = (y.maxCoeff() - y.minCoeff() + 1.0) / std::max(1.0, x.cwiseAbs().maxCoeff());
  for (int k = 1; k <= 500; ++k) {
    Vector gradient = Vector::Zero(x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
      const double r = y[i] - x.row(i).dot(beta);
      gradient -= (eta - (r < 0.0 ? 1.0 : 0.0)) * x.row(i).transpose();
    }
    gradient /= n;
    const double norm = gradient.norm();
    if (norm == 0.0) break;
    beta -= (step0 / (norm * std::sqrt(static_cast<double>(k)))) * gradient;
    const double objective = mean_check_loss(y - x * beta, eta);
    if (objective < best_objective) {
      best_objective = objective;
      best = beta;
    }
  }
  fit.beta = best;
  fit.objective = best_objective;
}

} // namespace

QrFit fit_quantile_design(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y, double eta,
                          const QrOptions& options, bool check_rank) {
  if (!(eta > 0.0 && eta < 1.0))
    raise(ErrorCode::InvalidArgument, "fit_quantile: eta must lie in (0,1), got " + std::to_string(eta));
  if (x.rows() != y.size()) raise(ErrorCode::InvalidArgument, "fit_quantile: x and y row counts differ");
  if (check_rank) require_full_rank(x);

  FnbResult ip = frisch_newton(x, y, eta, options);

  QrFit fit;
  fit.eta = eta;
  fit.iterations = ip.iterations;
  if (ip.converged) {
    fit.beta = ip.beta;
    fit.objective = mean_check_loss(y - x * fit.beta, eta);
    fit.converged = true;
    vertex_polish(x, y, eta, fit);
    return fit;
  }

  // Stalled interior point: polish whatever iterate we have and accept only
  // if it verifies the subgradient optimality condition.
  fit.beta = ip.beta.size() == x.cols() && ip.beta.allFinite()
                 ? ip.beta
                 : Vector(Eigen::LLT<Matrix>(x.transpose() * x).solve(x.transpose() * y));
  fit.objective = mean_check_loss(y - x * fit.beta, eta);
  subgradient_polish(x, y, eta, fit);
  vertex_polish(x, y, eta, fit);

  const double bound =
      static_cast<double>(x.cols()) * x.cwiseAbs().maxCoeff() / static_cast<double>(x.rows()) + 1e-6;
  if (subgradient_gap(x, y, fit.beta, eta) <= bound) {
    fit.converged = true;
    return fit;
  }
  raise(ErrorCode::SolverDivergence,
        "fit_quantile: no convergence after " + std::to_string(options.max_iterations) +
            " interior-point iterations at eta=" + std::to_string(eta));
}

QrFit fit_quantile(const Dataset& data, double eta, const QrOptions& options) {
  return fit_quantile_design(data.x, data.y, eta, options, true);
}

double unconditional_quantile(const Eigen::Ref<const Vector>& y, double tau) {
  if (y.size() == 0) raise(ErrorCode::EmptyInput, "unconditional_quantile: empty sample");
  if (!(tau > 0.0 && tau < 1.0))
    raise(ErrorCode::InvalidArgument, "unconditional_quantile: tau must lie in (0,1)");
  const Index n = y.size();
  // Order statistic y_(ceil(n*tau)); the epsilon guards exact-integer n*tau
  // against upward rounding.
  Index k = static_cast<Index>(std::ceil(static_cast<double>(n) * tau - 1e-9));
  k = std::clamp<Index>(k, 1, n);
  std::vector<double> copy(y.data(), y.data() + n);
  std::nth_element(copy.begin(), copy.begin() + (k - 1), copy.end());
  return copy[static_cast<std::size_t>(k - 1)];
}

} // namespace uqpe
