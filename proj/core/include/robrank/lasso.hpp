#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "robrank/hodge.hpp"
#include "robrank/types.hpp"

namespace robrank {

/// Componentwise sign(v) * max(|v| - t, 0).
Vector soft_threshold(const Vector& v, double t);

/// Outlier LASSO on the cyclic projection:
///   min_gamma  1/2 ||P (Y - gamma)||^2 + lambda ||gamma||_1.
struct OutlierEstimate {
  double lambda = 0.0;
  Vector gamma;
  IndexSet support;  // {r : gamma[r] != 0}, ascending
  double objective = 0.0;
  double kkt_violation = 0.0;
  Index iterations = 0;
  bool converged = true;
};

struct LassoOptions {
  double tol = 1e-9;        // target KKT violation
  Index max_iter = 200000;  // proximal-gradient iterations
  bool accelerate = false;  // FISTA with adaptive restart
};

double lasso_objective(const CyclicProjection& proj, const Vector& y, double lambda, const Vector& gamma);

/// Largest violation of the optimality conditions at gamma, with g = -P(Y - gamma):
/// |g_r + lambda sign(gamma_r)| on the support, max(0, |g_r| - lambda) off it.
double kkt_violation(const CyclicProjection& proj, const Vector& y, double lambda, const Vector& gamma);

/// Proximal gradient with unit step (P is an orthogonal projection, so the
/// smooth part has a 1-Lipschitz gradient). Returns the last iterate flagged
/// `converged = false` if the iteration cap is hit first.
OutlierEstimate solve_lasso(const CyclicProjection& proj, const Vector& y, double lambda, const LassoOptions& opts = {});
OutlierEstimate solve_lasso(const CyclicProjection& proj, const Vector& y, double lambda, const LassoOptions& opts,
                            const Vector& warm_start);

/// lambda_max = ||P Y||_inf; solve_lasso returns zero for lambda >= lambda_max.
double lambda_max(const CyclicProjection& proj, const Vector& y);

using SparseGamma = std::vector<std::pair<Index, double>>;

SparseGamma to_sparse(const Vector& gamma);
Vector to_dense(const SparseGamma& gamma, Index m);

struct PathPoint {
  double param = 0.0;  // lambda (LASSO) or t = k * dt (LBI)
  Index step = 0;      // grid index (LASSO) or iteration k (LBI)
  SparseGamma gamma;   // nonzeros, ascending index
  double objective = std::numeric_limits<double>::quiet_NaN();
  double kkt_violation = std::numeric_limits<double>::quiet_NaN();
};

enum class PathParameter { lambda, time };

struct RegularizationPath {
  static constexpr Index kNever = std::numeric_limits<Index>::max();

  PathParameter parameter = PathParameter::lambda;
  Index m = 0;
  std::vector<PathPoint> points;
  /// Index into `points` of the first point where each coordinate is nonzero.
  std::vector<Index> entry_order;
  /// Solver step at first entry (grid index or LBI iteration; kNever if never).
  std::vector<Index> entry_step;
  /// |gamma_r| at first entry (0 if never).
  std::vector<double> entry_magnitude;
  /// Dual magnitude in [0, 1] at the last point: |g_r| / lambda for LASSO,
  /// |z_r| for LBI. Orders the coordinates that never entered.
  Vector terminal_dual;

  [[nodiscard]] bool empty() const { return points.empty(); }
  /// Coordinates that entered at some point, ordered by entry (ties by index).
  [[nodiscard]] IndexSet entered() const;
};

/// Records entry information for a new point; shared by the LASSO path and LBI.
void record_path_point(RegularizationPath& path, PathPoint point);

/// Default grid: 100 points geometric from lambda_max down to 1e-3 lambda_max.
std::vector<double> default_lambda_grid(double lambda_max, Index points = 100, double floor_ratio = 1e-3);

/// Warm-started LASSO solves along a strictly decreasing lambda grid.
RegularizationPath lasso_path(const CyclicProjection& proj, const Vector& y,
                              std::optional<std::vector<double>> grid = std::nullopt, const LassoOptions& opts = {});

/// All comparisons ordered from most to least outlying: entered coordinates by
/// (entry step, larger entry magnitude, index), then the rest by (larger
/// terminal dual, index).
IndexSet detection_order(const RegularizationPath& path);

/// Per-comparison detection score (higher = more outlying), m - position in
/// detection_order. Suitable for roc_auc.
Vector detection_scores(const RegularizationPath& path);

/// The ceil(p m) comparisons with the smallest entry_order (ties by index).
/// Coordinates that never entered are not selected.
IndexSet top_fraction(const RegularizationPath& path, double p);

/// The path point with the largest lambda (earliest t) whose support size reaches `count`,
/// or the last point.
const PathPoint& first_point_with_support(const RegularizationPath& path, Index count);

/// Biased HLASSO scores: least squares on the corrected data Y - gamma.
RankingResult refit_hlasso(const CyclicProjection& proj, const Vector& y, const Vector& gamma);

/// Debiased LASSO+L2 scores: delete the rows in `support` and solve least
/// squares on the rest. Throws DataError if the remaining graph is disconnected.
RankingResult refit_drop(const DesignOperator& op, const Vector& y, std::span<const Index> support,
                         const SolveOptions& opts = {});

/// Huber's concomitant scale estimate: jointly convex in (theta, sigma),
/// solved by alternating an HLASSO step at lambda = M sigma with a 1-D
/// sigma update.
struct ScaleEstimate {
  RankingResult ranking;
  OutlierEstimate outliers;
  double sigma = 0.0;
  double lambda = 0.0;
  Index alternations = 0;
  std::vector<double> objective_trace;  // joint objective after each alternation
};

struct ScaleOptions {
  double M = 1.35;
  double tol = 1e-6;  // relative change in sigma
  Index max_alternations = 100;
  LassoOptions lasso{};
};

/// Joint objective sum_r rho_M(r_r / sigma) sigma + a sigma, with r = Y - X theta,
/// rho_M the Huber function, and a = (m - rank X) E[chi_M(Z)] for standard normal Z.
double concomitant_objective(const CyclicProjection& proj, const Vector& residual, double sigma, double M);
/// Normalising constant a of the scale term.
double concomitant_scale_constant(const CyclicProjection& proj, double M);

ScaleEstimate concomitant_scale(const CyclicProjection& proj, const Vector& y, const ScaleOptions& opts = {});

/// Cross-validation over random cyclic directions: a random orthonormal basis
/// of the cyclic space (l directions, from Gaussian probes projected by P) is
/// split into folds; each fold's LASSO fit on the training directions is scored
/// by squared error on the held-out directions.
struct CvResult {
  std::vector<double> grid;
  Matrix fold_losses;  // grid.size() x folds
  std::vector<double> mean_loss;
  std::vector<double> se_loss;
  double lambda = 0.0;      // minimiser of the mean validation loss
  double lambda_1se = 0.0;  // largest lambda within one standard error of the minimum
};

CvResult cv_lambda(const CyclicProjection& proj, const Vector& y, Index folds = 5,
                   std::optional<std::vector<double>> grid = std::nullopt, std::uint64_t seed = 0);

}  // namespace robrank
