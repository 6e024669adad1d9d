#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "robrank/comparison.hpp"
#include "robrank/types.hpp"

namespace robrank {

/// Weighted graph Laplacian L0 = X^T X in compressed-row form; duplicate
/// comparisons of the same pair are merged into one off-diagonal entry.
struct SparseLaplacian {
  Index n = 0;
  std::vector<Index> row_start;  // size n + 1
  std::vector<Index> col;
  std::vector<double> val;
  Vector diagonal;

  void multiply(const Vector& x, Vector& out) const;
  [[nodiscard]] Matrix to_dense() const;
};

/// Gradient operator X = delta_0 of the comparison graph, optionally
/// bordered by a home-advantage column. Row r is sqrt(w_r) * (e_i - e_j),
/// with sqrt(w_r) * host_r in the intercept column (host_r = +1 when item
/// i hosts, -1 when item j hosts, 0 otherwise).
///
/// Immutable after construction; safe for concurrent const use.
class DesignOperator {
 public:
  struct Row {
    Index i;
    Index j;
    double scale;  // sqrt(weight)
    double host;   // scaled intercept entry
  };

  [[nodiscard]] Index n() const { return n_; }
  [[nodiscard]] Index m() const { return rows_.size(); }
  [[nodiscard]] bool has_intercept() const { return has_intercept_; }
  /// Number of unknowns: n, plus one with an intercept.
  [[nodiscard]] Index cols() const { return n_ + (has_intercept_ ? 1 : 0); }
  [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }

  /// X v (v has cols() entries).
  [[nodiscard]] Vector apply(const Vector& v) const;
  /// X^T y (y has m() entries).
  [[nodiscard]] Vector adjoint(const Vector& y) const;
  /// Score block of X^T y, i.e. div(y).
  [[nodiscard]] Vector divergence(const Vector& y) const;
  /// X restricted to the score block applied to theta (n entries).
  [[nodiscard]] Vector gradient(const Vector& theta) const;
  /// Intercept column h (zero vector without an intercept).
  [[nodiscard]] Vector intercept_column() const;

  /// Applies the row weights to raw comparison values: sqrt(w_r) * Y_r.
  [[nodiscard]] Vector weighted(const Vector& raw) const;

  [[nodiscard]] const SparseLaplacian& laplacian() const { return laplacian_; }
  [[nodiscard]] Vector laplacian_apply(const Vector& x) const;

  /// Cholesky factor of L0 + (tr L0 / n^2) 11^T, present for small connected graphs.
  [[nodiscard]] const Eigen::LLT<Matrix>* dense_factor() const { return dense_factor_.get(); }

  /// Number of connected components of the comparison graph.
  [[nodiscard]] Index component_count() const { return component_count_; }
  [[nodiscard]] bool connected() const { return component_count_ == 1; }

  /// ||X X^T|| estimated at construction.
  [[nodiscard]] double operator_norm() const { return operator_norm_; }

  /// Operator with the given rows deleted (same items and intercept setting).
  [[nodiscard]] DesignOperator without_rows(std::span<const Index> drop) const;

  /// Largest n for which build_design precomputes a dense factorization.
  static constexpr Index kDenseFactorLimit = 256;

 private:
  friend DesignOperator build_design(const ComparisonDataset&, bool);
  void assemble();

  Index n_ = 0;
  bool has_intercept_ = false;
  std::vector<Row> rows_;
  SparseLaplacian laplacian_;
  std::shared_ptr<const Eigen::LLT<Matrix>> dense_factor_;
  double operator_norm_ = 0.0;
  Index component_count_ = 0;
};

/// Builds the matrix-free design for `dataset`. Throws DataError on an empty
/// dataset or when `with_intercept` is requested without host information.
DesignOperator build_design(const ComparisonDataset& dataset, bool with_intercept = false);

/// Forward product X v, or adjoint X^T v when `adjoint` is set.
Vector design_apply(const DesignOperator& op, const Vector& v, bool adjoint);

/// ||X X^T|| (= ||X^T X||) by power iteration to relative accuracy 1e-6.
double estimate_operator_norm(const DesignOperator& op);

}  // namespace robrank
