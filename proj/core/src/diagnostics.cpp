#include "robrank/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "robrank/error.hpp"

namespace robrank {

namespace {
inline Eigen::Index ei(Index k) { return static_cast<Eigen::Index>(k); }
}  // namespace

ConsistencyReport consistency_report(const CyclicProjection& proj, const ConsistencyInputs& in) {
  const auto& op = proj.design();
  const Index m = op.m();
  const Index l = proj.cyclic_dimension();

  IndexSet S = in.support;
  std::sort(S.begin(), S.end());
  if (std::adjacent_find(S.begin(), S.end()) != S.end()) throw UsageError("consistency_report: duplicate support index");
  if (S.empty()) throw UsageError("consistency_report: support must be nonempty");
  if (S.back() >= m) throw UsageError("consistency_report: support index out of range");
  if (S.size() > l)
    throw UsageError("consistency_report: |S| = " + std::to_string(S.size()) + " exceeds the cyclic dimension " +
                     std::to_string(l));
  if (S.size() > kMaxDiagnosticSupport)
    throw UsageError("consistency_report: supports larger than " + std::to_string(kMaxDiagnosticSupport) +
                     " are not supported");
  if (!(in.sigma > 0.0)) throw UsageError("consistency_report: sigma must be positive");
  if (in.gamma_star && static_cast<Index>(in.gamma_star->size()) != m)
    throw UsageError("consistency_report: gamma* must have m entries");

  ConsistencyReport rep;
  rep.support = S;
  rep.l = l;
  rep.m = m;
  rep.sigma = in.sigma;
  rep.kappa = in.kappa;
  rep.step_h = in.step_h;
  rep.intercept_projected = op.has_intercept() && proj.intercept_identifiable();
  rep.plugins.push_back("sigma");

  const Index s = S.size();
  std::vector<bool> in_support(m, false);
  for (Index j : S) in_support[j] = true;

  // Columns of P on S: one projection per support coordinate.
  Matrix cols(ei(m), ei(s));
  for (Index k = 0; k < s; ++k) {
    Vector e = Vector::Zero(ei(m));
    e[ei(S[k])] = 1.0;
    cols.col(ei(k)) = proj.apply(e);
  }
  Matrix pss(ei(s), ei(s));
  for (Index a = 0; a < s; ++a) pss.row(ei(a)) = cols.row(ei(S[a]));
  pss = 0.5 * (pss + pss.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(pss);
  const Vector evals = eig.eigenvalues();
  const double top = evals.maxCoeff();
  rep.p_ss_norm = top;
  const double bottom = evals.minCoeff();
  const double lf = static_cast<double>(l);
  const bool invertible = bottom > 1e-10 * std::max(1.0, top);
  rep.c_min = invertible ? bottom / lf : 0.0;
  if (in.step_h) rep.h_restricted = *in.step_h * top;

  const Vector diag = proj.diagonal();
  double mu = 0.0;
  for (Index j = 0; j < m; ++j)
    if (!in_support[j]) mu = std::max(mu, diag[ei(j)] / lf);
  rep.mu_psi = std::clamp(mu, 0.0, 1.0);

  if (in.gamma_star) {
    double gmin = std::numeric_limits<double>::infinity(), gmax = 0.0;
    for (Index j : S) {
      const double g = std::abs((*in.gamma_star)[ei(j)]);
      gmin = std::min(gmin, g);
      gmax = std::max(gmax, g);
    }
    rep.gamma_min = gmin;
    rep.gamma_max = gmax;
    rep.plugins.push_back("gamma_min");
    rep.plugins.push_back("gamma_max");
  }

  if (!invertible) return rep;

  const Matrix pss_inv = eig.eigenvectors() * evals.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  const Matrix A = cols * pss_inv;  // m x s, rows on S reproduce the identity
  double irrep = 0.0;
  for (Index j = 0; j < m; ++j)
    if (!in_support[j]) irrep = std::max(irrep, A.row(ei(j)).cwiseAbs().sum());
  // Exact ties with a support coordinate (symmetric cycles) land within rounding of 1.
  if (std::abs(irrep - 1.0) <= 1e-10) irrep = 1.0;
  rep.irrep_value = irrep;
  rep.eta = std::max(0.0, 1.0 - irrep);

  const double eta = *rep.eta;
  const double log_m = std::log(static_cast<double>(m));
  if (eta > 0.0) rep.lambda_bound = 2.0 * in.sigma * std::sqrt(rep.mu_psi) / eta * std::sqrt(lf * log_m);

  // ||(P_SS / l)^{-1}||_inf = l ||P_SS^{-1}||_inf
  const double inv_norm = lf * pss_inv.cwiseAbs().rowwise().sum().maxCoeff();
  if (rep.mu_psi > 0.0) {
    rep.h_bound = eta / std::sqrt(rep.c_min * rep.mu_psi) + inv_norm;
    if (rep.lambda_bound) rep.c3_threshold = *rep.lambda_bound / lf * *rep.h_bound;
  }

  if (in.gamma_star) {
    const double psi_gamma = proj.apply(*in.gamma_star).norm();
    rep.plugins.push_back("psi_gamma_norm");
    const double sz = static_cast<double>(s);
    const double log_l = std::log(lf);
    rep.B_plugin = *rep.gamma_max + 2.0 * in.sigma * std::sqrt(log_m / (rep.c_min * lf)) +
                   (psi_gamma + 2.0 * sz * std::sqrt(std::max(0.0, log_l))) / (lf * std::sqrt(rep.c_min));
    if (in.kappa && eta > 0.0 && rep.mu_psi > 0.0) {
      rep.tau_bar = (1.0 - *rep.B_plugin / (*in.kappa * eta)) * eta / (2.0 * in.sigma * std::sqrt(rep.mu_psi)) *
                    std::sqrt(1.0 / (lf * log_m));
    }
  }
  return rep;
}

SignConsistency sign_consistency_check(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) throw UsageError("sign_consistency_check: length mismatch");
  SignConsistency out;
  Index inter = 0, uni = 0;
  for (Eigen::Index r = 0; r < estimate.size(); ++r) {
    const bool e = estimate[r] != 0.0, t = truth[r] != 0.0;
    if (e && !t) out.no_false_positive = false;
    const int se = (estimate[r] > 0) - (estimate[r] < 0);
    const int tr = (truth[r] > 0) - (truth[r] < 0);
    if (se != tr) out.sign_consistent = false;
    if (e && t) ++inter;
    if (e || t) ++uni;
  }
  out.jaccard = uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
  return out;
}

}  // namespace robrank
