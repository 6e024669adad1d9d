#include "robrank/lbi.hpp"

#include <cmath>
#include <string>

#include "robrank/error.hpp"

namespace robrank {

namespace {

inline Eigen::Index ei(Index k) { return static_cast<Eigen::Index>(k); }

// shrink(z) = sign(z) max(|z| - 1, 0)
inline double shrink1(double z) { return z > 1.0 ? z - 1.0 : z < -1.0 ? z + 1.0 : 0.0; }

}  // namespace

LbiConfig preset_config(LbiPreset preset) {
  LbiConfig cfg;
  switch (preset) {
    case LbiPreset::pcvqa:
      cfg.kappa = 50.0;
      cfg.delta_t = 1.0 / 25000.0;
      break;
    case LbiPreset::nba:
      cfg.kappa = 5000.0;
      cfg.delta_t = 1.0 / 500000.0;
      break;
    case LbiPreset::tennis:
      cfg.kappa = 10000.0;
      cfg.delta_t = 1.0 / 1000000.0;
      break;
  }
  return cfg;
}

std::optional<LbiPreset> parse_preset(std::string_view name) {
  if (name == "pcvqa") return LbiPreset::pcvqa;
  if (name == "nba") return LbiPreset::nba;
  if (name == "tennis") return LbiPreset::tennis;
  return std::nullopt;
}

double safe_delta_t(const DesignOperator& op, double kappa, LbiVariant variant) {
  if (!(kappa > 0.0)) throw UsageError("LBI: kappa must be positive");
  if (variant == LbiVariant::full) return 1.0 / (kappa * (op.operator_norm() + 1.0) * 1.01);
  return 1.0 / (kappa * 1.01);
}

void check_step_size(const DesignOperator& op, const LbiConfig& config) {
  if (!(config.kappa > 0.0) || !(config.delta_t > 0.0)) throw UsageError("LBI: kappa and dt must be positive");
  const double h = config.h();
  if (config.variant == LbiVariant::full) {
    const double bound = h * (op.operator_norm() + 1.0);
    if (!(bound < 2.0))
      throw NumericalError("LBI step too large: h (||XX^T|| + 1) = " + std::to_string(bound) + " must be < 2");
  } else if (!(h < 2.0)) {
    throw NumericalError("LBI step too large: h = " + std::to_string(h) + " must be < 2");
  }
}

std::string_view to_string(LbiStopReason reason) {
  switch (reason) {
    case LbiStopReason::iterations: return "iterations";
    case LbiStopReason::support_budget: return "support_budget";
    case LbiStopReason::time_horizon: return "time_horizon";
  }
  return "?";
}

LbiResult lbi_run(const CyclicProjection& proj, const Vector& y, const LbiConfig& config) {
  const auto& op = proj.design();
  const Index m = op.m();
  if (static_cast<Index>(y.size()) != m) throw UsageError("lbi_run: response must have m entries");

  LbiResult out;
  out.config = config;
  if (out.config.delta_t == 0.0) out.config.delta_t = safe_delta_t(op, config.kappa, config.variant);
  const LbiConfig& cfg = out.config;
  check_step_size(op, cfg);
  if (cfg.record == RecordMode::every_k_iters && cfg.record_every == 0)
    throw UsageError("LBI: record_every must be positive");

  const double kappa = cfg.kappa;
  const double dt = cfg.delta_t;
  const double h = cfg.h();
  const bool full = cfg.variant == LbiVariant::full;

  auto& path = out.path;
  path.parameter = PathParameter::time;
  path.m = m;
  path.entry_order.assign(m, RegularizationPath::kNever);
  path.entry_step.assign(m, RegularizationPath::kNever);
  path.entry_magnitude.assign(m, 0.0);
  std::vector<Index> entry_step(m, RegularizationPath::kNever);
  std::vector<double> entry_mag(m, 0.0);

  LbiState& st = out.state;
  st.z = Vector::Zero(ei(m));
  st.gamma = Vector::Zero(ei(m));
  Vector py;
  if (full) {
    const auto f = proj.fit(y);
    st.theta = Vector::Zero(ei(op.cols()));
    st.theta.head(ei(op.n())) = f.theta;
    if (op.has_intercept()) st.theta[ei(op.n())] = f.intercept;
  } else {
    py = proj.apply(y);
  }

  Index support_size = 0;
  auto record = [&](Index k) {
    record_path_point(path, {static_cast<double>(k) * dt, k, to_sparse(st.gamma)});
  };
  record(0);

  Vector residual(ei(m));
  for (;;) {
    const double t = static_cast<double>(st.k) * dt;
    if (cfg.time_horizon && t >= *cfg.time_horizon - 1e-12 * dt) {
      out.stop_reason = LbiStopReason::time_horizon;
      break;
    }
    if (cfg.support_budget && support_size >= *cfg.support_budget) {
      out.stop_reason = LbiStopReason::support_budget;
      break;
    }
    if (st.k >= cfg.max_iters) {
      out.stop_reason = LbiStopReason::iterations;
      out.hit_iteration_cap = cfg.time_horizon.has_value() || cfg.support_budget.has_value();
      break;
    }

    if (full) {
      residual = y - op.apply(st.theta) - st.gamma;
      st.theta.noalias() += h * op.adjoint(residual);
    } else {
      // P(Y - gamma) = PY - P gamma; skip the solve while gamma = 0.
      residual = support_size ? Vector(py - proj.apply(st.gamma)) : py;
    }
    st.z.noalias() += dt * residual;
    ++st.k;

    bool changed = false;
    support_size = 0;
    for (Index r = 0; r < m; ++r) {
      const double g = kappa * shrink1(st.z[ei(r)]);
      if ((g != 0.0) != (st.gamma[ei(r)] != 0.0)) changed = true;
      st.gamma[ei(r)] = g;
      if (g != 0.0) {
        ++support_size;
        if (entry_step[r] == RegularizationPath::kNever) {
          entry_step[r] = st.k;
          entry_mag[r] = std::abs(g);
        }
      }
    }
    const bool due = cfg.record == RecordMode::every_support_change ? changed : st.k % cfg.record_every == 0;
    if (due) record(st.k);
  }
  if (path.points.back().step != st.k) record(st.k);

  // Entry steps are tracked every iteration, independent of the recording cadence.
  path.entry_step = std::move(entry_step);
  path.entry_magnitude = std::move(entry_mag);
  path.terminal_dual = st.z.cwiseAbs().cwiseMin(1.0);

  const double t_final = static_cast<double>(st.k) * dt;
  auto& est = out.outliers;
  est.lambda = t_final > 0.0 ? 1.0 / t_final : std::numeric_limits<double>::infinity();
  est.gamma = st.gamma;
  for (Index r = 0; r < m; ++r)
    if (st.gamma[ei(r)] != 0.0) est.support.push_back(r);
  est.iterations = st.k;
  est.converged = !out.hit_iteration_cap;
  if (std::isfinite(est.lambda)) {
    est.objective = lasso_objective(proj, y, est.lambda, est.gamma);
    est.kkt_violation = kkt_violation(proj, y, est.lambda, est.gamma);
  } else {
    est.objective = 0.5 * proj.apply(y).squaredNorm();
  }

  if (full) {
    RankingResult rr;
    rr.theta = st.theta.head(ei(op.n()));
    rr.theta.array() -= rr.theta.mean();
    if (op.has_intercept()) rr.intercept = st.theta[ei(op.n())];
    rr.residual_l2 = (y - op.apply(st.theta)).norm();
    rr.method = Method::lbi;
    rr.solver_iterations = st.k;
    out.ranking = std::move(rr);
  } else if (cfg.refit != FinalRefit::none) {
    out.ranking = cfg.refit == FinalRefit::drop ? refit_drop(op, y, est.support, proj.options())
                                                : refit_hlasso(proj, y, est.gamma);
    out.ranking.method = Method::lbi;
    out.ranking.solver_iterations = st.k;
  }
  return out;
}

}  // namespace robrank
