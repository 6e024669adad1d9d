#pragma once

#include <optional>
#include <string_view>

#include "robrank/comparison.hpp"
#include "robrank/design.hpp"
#include "robrank/types.hpp"

namespace robrank {

enum class LaplacianBackend {
  automatic,           // dense factor when the operator carries one, else CG
  conjugate_gradient,  // deflated Jacobi-preconditioned CG
  dense,               // precomputed Cholesky factor (small graphs only)
};

struct SolveOptions {
  double tol = 1e-10;   // relative residual target
  Index max_iter = 0;   // CG iteration cap; 0 means 10 * n
  LaplacianBackend backend = LaplacianBackend::automatic;
};

struct LaplacianSolution {
  Vector x;
  Index iterations = 0;
  double relative_residual = 0.0;
};

/// Minimum-norm solution of L0 x = b (the component of b along the constant
/// vector is deflated first; the result sums to zero).
/// Throws DataError on a disconnected graph and NumericalError when CG
/// exhausts its iteration cap.
LaplacianSolution laplacian_solve(const DesignOperator& op, const Vector& b, const SolveOptions& opts = {});

enum class Method { l2, hlasso, lbi, lasso_l2 };
std::string_view to_string(Method method);

struct RankingResult {
  Vector theta;                     // zero-sum scores
  std::optional<double> intercept;  // home advantage c
  double residual_l2 = 0.0;         // ||Y - X theta - c h||
  Method method = Method::l2;
  Index solver_iterations = 0;
};

/// Orthogonal projection P = I - B (B^T B)^+ B^T onto the cyclic subspace,
/// where B is the design (with its intercept column when present). Applied
/// matrix-free: two operator products and one Laplacian solve per call.
///
/// Holds a reference to `op`, which must outlive the projection.
class CyclicProjection {
 public:
  explicit CyclicProjection(const DesignOperator& op, SolveOptions opts = {});

  struct Fit {
    Vector theta;      // zero-sum score block
    double intercept;  // 0 without intercept
    Vector residual;   // y - X theta - c h  (= P y)
    Index iterations;
  };

  /// Least-squares fit of y onto the design columns.
  [[nodiscard]] Fit fit(const Vector& y) const;
  /// P v.
  [[nodiscard]] Vector apply(const Vector& v) const;

  [[nodiscard]] const DesignOperator& design() const { return *op_; }
  [[nodiscard]] const SolveOptions& options() const { return opts_; }

  /// Dimension of the cyclic subspace, m - rank(B).
  [[nodiscard]] Index cyclic_dimension() const;
  /// False when the intercept column lies in the span of the score columns
  /// (for example when no row names a host); the intercept is then fixed at 0.
  [[nodiscard]] bool intercept_identifiable() const { return intercept_norm2_ > 0.0; }

  /// Diagonal of P, from one Laplacian solve per item.
  [[nodiscard]] Vector diagonal() const;

 private:
  const DesignOperator* op_;
  SolveOptions opts_;
  Vector intercept_theta_;  // L0^+ div(h)
  Vector intercept_resid_;  // P0 h, P0 the projection without intercept
  double intercept_norm2_ = 0.0;
};

/// Weighted response sqrt(w) * Y for `dataset` under `op`.
Vector response(const DesignOperator& op, const ComparisonDataset& dataset);

/// Least-squares (HodgeRank) scores for response Y.
RankingResult solve_l2(const DesignOperator& op, const Vector& y, const SolveOptions& opts = {});
RankingResult solve_l2(const CyclicProjection& proj, const Vector& y);

/// P v.
Vector project_cyclic(const CyclicProjection& proj, const Vector& v);

/// Fraction of item triples whose majority-vote preferences are transitive.
/// Requires every pair to be compared and no pair to have tied votes.
double tsr(const ComparisonDataset& dataset);

}  // namespace robrank
