#pragma once

#include <optional>
#include <string_view>

#include "robrank/hodge.hpp"
#include "robrank/lasso.hpp"
#include "robrank/types.hpp"

namespace robrank {

/// Linearized Bregman iteration variants.
///  - full: joint gradient dynamics on (theta, gamma) for the HLASSO objective.
///  - projected: gamma-only dynamics on the cyclic projection P(Y - gamma).
enum class LbiVariant { full, projected };

enum class RecordMode { every_support_change, every_k_iters };

/// Scores reported by the projected variant; `none` leaves the ranking empty.
enum class FinalRefit { drop, hlasso, none };

struct LbiConfig {
  double kappa = 50.0;
  double delta_t = 0.0;  // 0 selects the safe default for the variant
  LbiVariant variant = LbiVariant::projected;

  // Stopping rules, combined by OR. max_iters always applies.
  Index max_iters = 100000;
  std::optional<Index> support_budget;  // stop once |supp gamma| >= budget
  std::optional<double> time_horizon;   // stop once t = k dt >= horizon

  RecordMode record = RecordMode::every_support_change;
  Index record_every = 100;

  FinalRefit refit = FinalRefit::drop;  // projected variant only

  [[nodiscard]] double h() const { return kappa * delta_t; }
};

enum class LbiPreset { pcvqa, nba, tennis };

/// (kappa, dt) pairs used for the crowdsourced video, NBA and tennis analyses.
LbiConfig preset_config(LbiPreset preset);
std::optional<LbiPreset> parse_preset(std::string_view name);

/// dt = 1 / (kappa (||L0|| + 1) 1.01) for the full variant, 1 / (kappa 1.01)
/// for the projected one.
double safe_delta_t(const DesignOperator& op, double kappa, LbiVariant variant);

/// Throws NumericalError unless h (||X X^T|| + 1) < 2 (full) or h < 2 (projected).
void check_step_size(const DesignOperator& op, const LbiConfig& config);

struct LbiState {
  Index k = 0;
  Vector z;      // z = p + gamma / kappa
  Vector gamma;  // gamma = kappa * shrink(z)
  Vector theta;  // full variant: score block followed by the intercept (if any)
};

enum class LbiStopReason { iterations, support_budget, time_horizon };
std::string_view to_string(LbiStopReason reason);

struct LbiResult {
  RegularizationPath path;   // parameter = time
  RankingResult ranking;     // final scores
  OutlierEstimate outliers;  // final gamma; lambda reported as 1 / t
  LbiState state;
  LbiConfig config;           // with delta_t resolved
  LbiStopReason stop_reason = LbiStopReason::iterations;
  bool hit_iteration_cap = false;  // max_iters ended a run that had another rule configured
};

/// Runs LBI on response y (already weighted by the design).
LbiResult lbi_run(const CyclicProjection& proj, const Vector& y, const LbiConfig& config);

}  // namespace robrank
