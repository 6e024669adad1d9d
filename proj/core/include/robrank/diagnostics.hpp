#pragma once

#include <optional>
#include <string>
#include <vector>

#include "robrank/hodge.hpp"
#include "robrank/lasso.hpp"
#include "robrank/types.hpp"

namespace robrank {

/// Support-recovery conditions and thresholds for outlier detection with
/// design Psi (Psi^T Psi = P) evaluated numerically for a candidate support S.
///
/// Quantities the consistency theory states for population values (sigma,
/// gamma*) are computed from the supplied plug-ins; `plugins` names each one.
/// Fields that depend on an invertible P_SS (or on eta > 0, mu > 0) are unset
/// when that precondition fails.
struct ConsistencyReport {
  IndexSet support;
  Index l = 0;  // cyclic dimension
  Index m = 0;
  double c_min = 0.0;  // lambda_min(P_SS / l)
  std::optional<double> irrep_value;  // ||P_{S^c,S} P_SS^{-1}||_inf
  std::optional<double> eta;          // max(0, 1 - irrep_value)
  double mu_psi = 0.0;                // max_{j in S^c} P_jj / l
  double sigma = 0.0;
  std::optional<double> gamma_min;     // min_{S} |gamma*|
  std::optional<double> gamma_max;     // max_{S} |gamma*|
  std::optional<double> lambda_bound;  // 2 sigma sqrt(mu) / eta * sqrt(l log m)
  std::optional<double> h_bound;       // eta / sqrt(C_min mu) + ||(P_SS / l)^{-1}||_inf
  std::optional<double> c3_threshold;  // lambda_bound / l * h_bound
  std::optional<double> B_plugin;
  std::optional<double> tau_bar;
  std::optional<double> kappa;
  std::optional<double> step_h;
  std::optional<double> h_restricted;  // h ||P_SS||
  double p_ss_norm = 0.0;              // ||P_SS||
  bool intercept_projected = false;
  std::vector<std::string> plugins;

  [[nodiscard]] bool c1_holds() const { return c_min > 0.0; }
  [[nodiscard]] bool c2_holds() const { return irrep_value.has_value() && *irrep_value < 1.0; }
  [[nodiscard]] bool c3_holds() const {
    return c3_threshold.has_value() && gamma_min.has_value() && *gamma_min > *c3_threshold;
  }
};

struct ConsistencyInputs {
  IndexSet support;
  double sigma = 1.0;
  std::optional<Vector> gamma_star;  // dense, length m
  std::optional<double> kappa;
  std::optional<double> step_h;
};

/// Largest support the diagnostics accept (dense |S| x |S| work).
inline constexpr Index kMaxDiagnosticSupport = 2000;

ConsistencyReport consistency_report(const CyclicProjection& proj, const ConsistencyInputs& inputs);

struct SignConsistency {
  bool no_false_positive = true;
  bool sign_consistent = true;
  double jaccard = 1.0;
};

SignConsistency sign_consistency_check(const Vector& estimate, const Vector& truth);

}  // namespace robrank
