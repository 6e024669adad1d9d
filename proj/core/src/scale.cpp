#include <cmath>
#include <numbers>

#include "robrank/error.hpp"
#include "robrank/lasso.hpp"

namespace robrank {

namespace {

// chi_M(u) = u psi_M(u) - rho_M(u) = min(u^2, M^2) / 2.
double chi_sum(const Vector& r, double sigma, double M) {
  double s = 0.0;
  const double cap = M * M;
  for (Eigen::Index k = 0; k < r.size(); ++k) {
    const double u = r[k] / sigma;
    s += 0.5 * std::min(u * u, cap);
  }
  return s;
}

double huber(double x, double M) {
  const double a = std::abs(x);
  return a <= M ? 0.5 * x * x : M * a - 0.5 * M * M;
}

// argmin_sigma of the joint objective for fixed residuals; 0 on collapse.
double update_sigma(const Vector& r, double a, double M) {
  Eigen::Index nonzero = 0;
  for (Eigen::Index k = 0; k < r.size(); ++k)
    if (r[k] != 0.0) ++nonzero;
  // d/dsigma = a - sum chi(r / sigma), increasing in sigma; its limit at 0 is
  // a - nonzero * M^2 / 2.
  if (static_cast<double>(nonzero) * 0.5 * M * M <= a) return 0.0;
  double hi = std::sqrt(r.squaredNorm() / (2.0 * a));
  double lo = hi;
  while (chi_sum(r, lo, M) <= a) lo *= 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (chi_sum(r, mid, M) > a) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double concomitant_scale_constant(const CyclicProjection& proj, double M) {
  // E[chi_M(Z)] for Z ~ N(0, 1).
  const double p_in = std::erf(M / std::numbers::sqrt2);
  const double phi = std::exp(-0.5 * M * M) / std::sqrt(2.0 * std::numbers::pi);
  const double beta = 0.5 * (p_in - 2.0 * M * phi + M * M * (1.0 - p_in));
  return static_cast<double>(proj.cyclic_dimension()) * beta;
}

double concomitant_objective(const CyclicProjection& proj, const Vector& residual, double sigma, double M) {
  if (!(sigma > 0.0)) throw UsageError("concomitant_objective: sigma must be positive");
  double s = 0.0;
  for (Eigen::Index k = 0; k < residual.size(); ++k) s += huber(residual[k] / sigma, M) * sigma;
  return s + concomitant_scale_constant(proj, M) * sigma;
}

ScaleEstimate concomitant_scale(const CyclicProjection& proj, const Vector& y, const ScaleOptions& opts) {
  const auto& op = proj.design();
  if (op.m() <= op.n()) throw DataError("concomitant scale estimation needs more comparisons than items");
  const double M = opts.M;
  const double a = concomitant_scale_constant(proj, M);

  auto full_residual = [&](const RankingResult& rr) {
    Vector u(static_cast<Eigen::Index>(op.cols()));
    u.head(static_cast<Eigen::Index>(op.n())) = rr.theta;
    if (op.has_intercept()) u[static_cast<Eigen::Index>(op.n())] = rr.intercept.value_or(0.0);
    return Vector(y - op.apply(u));
  };

  ScaleEstimate est;
  est.ranking = solve_l2(proj, y);
  Vector r = full_residual(est.ranking);
  double sigma = r.norm() / std::sqrt(static_cast<double>(proj.cyclic_dimension()));
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  if (!(sigma > 1e-12 * scale))
    throw NumericalError("concomitant scale collapsed to zero: the data are fit exactly");
  est.objective_trace.push_back(concomitant_objective(proj, r, sigma, M));

  Vector gamma = Vector::Zero(y.size());
  for (Index alt = 1; alt <= opts.max_alternations; ++alt) {
    // theta-step: Huber regression at lambda = M sigma via HLASSO.
    est.outliers = solve_lasso(proj, y, M * sigma, opts.lasso, gamma);
    gamma = est.outliers.gamma;
    est.ranking = refit_hlasso(proj, y, gamma);
    r = full_residual(est.ranking);
    // sigma-step.
    const double next = update_sigma(r, a, M);
    if (!(next > 1e-12 * scale))
      throw NumericalError("concomitant scale collapsed to zero after " + std::to_string(alt) + " alternations");
    est.objective_trace.push_back(concomitant_objective(proj, r, next, M));
    est.alternations = alt;
    const double change = std::abs(next - sigma) / sigma;
    sigma = next;
    if (change < opts.tol) break;
  }
  est.sigma = sigma;
  est.lambda = M * sigma;
  return est;
}

}  // namespace robrank
