#include "robrank/hodge.hpp"

#include <cmath>
#include <map>
#include <string>

#include "robrank/error.hpp"

namespace robrank {

namespace {

inline Eigen::Index ei(Index k) { return static_cast<Eigen::Index>(k); }

void deflate(Vector& v) {
  if (v.size() > 0) v.array() -= v.mean();
}

LaplacianSolution solve_dense(const DesignOperator& op, const Vector& b, double tol) {
  const auto& factor = *op.dense_factor();
  const double bnorm = b.norm();
  LaplacianSolution sol;
  sol.x = factor.solve(b);
  deflate(sol.x);
  Vector r = b - op.laplacian_apply(sol.x);
  sol.relative_residual = r.norm() / bnorm;
  // A couple of refinement sweeps recover accuracy lost to conditioning.
  for (int sweep = 0; sweep < 3 && sol.relative_residual > tol; ++sweep) {
    Vector dx = factor.solve(r);
    deflate(dx);
    sol.x += dx;
    r = b - op.laplacian_apply(sol.x);
    sol.relative_residual = r.norm() / bnorm;
  }
  sol.iterations = 1;
  return sol;
}

LaplacianSolution solve_cg(const DesignOperator& op, const Vector& b, double tol, Index cap) {
  const auto& lap = op.laplacian();
  const double bnorm = b.norm();
  const Vector inv_diag = lap.diagonal.cwiseInverse();

  LaplacianSolution sol;
  sol.x = Vector::Zero(b.size());
  Vector r = b;
  Vector z = inv_diag.cwiseProduct(r);
  deflate(z);
  Vector p = z;
  Vector ap(b.size());
  double rz = r.dot(z);
  double rnorm = bnorm;
  Index it = 0;
  while (rnorm > tol * bnorm) {
    if (it == cap)
      throw NumericalError("Laplacian CG did not reach relative residual " + std::to_string(tol) + " within " +
                           std::to_string(cap) + " iterations (reached " + std::to_string(rnorm / bnorm) + ")");
    ++it;
    lap.multiply(p, ap);
    const double alpha = rz / p.dot(ap);
    sol.x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    rnorm = r.norm();
    if (rnorm <= tol * bnorm) break;
    z = inv_diag.cwiseProduct(r);
    deflate(z);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  deflate(sol.x);
  sol.iterations = it;
  sol.relative_residual = rnorm / bnorm;
  return sol;
}

}  // namespace

LaplacianSolution laplacian_solve(const DesignOperator& op, const Vector& b, const SolveOptions& opts) {
  if (static_cast<Index>(b.size()) != op.n()) throw UsageError("laplacian_solve: right-hand side must have n entries");
  if (!op.connected())
    throw DataError("laplacian_solve: comparison graph has " + std::to_string(op.component_count()) + " components");
  Vector rhs = b;
  deflate(rhs);
  if (rhs.norm() == 0.0) return {Vector::Zero(b.size()), 0, 0.0};

  const bool dense = opts.backend == LaplacianBackend::dense ||
                     (opts.backend == LaplacianBackend::automatic && op.dense_factor() != nullptr);
  if (dense) {
    if (op.dense_factor() == nullptr) throw UsageError("dense Laplacian backend requested but no factor is available");
    return solve_dense(op, rhs, opts.tol);
  }
  const Index cap = opts.max_iter ? opts.max_iter : 10 * op.n();
  return solve_cg(op, rhs, opts.tol, cap);
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::l2: return "L2";
    case Method::hlasso: return "HLASSO";
    case Method::lbi: return "LBI";
    case Method::lasso_l2: return "LASSO+L2";
  }
  return "?";
}

CyclicProjection::CyclicProjection(const DesignOperator& op, SolveOptions opts) : op_(&op), opts_(opts) {
  if (!op.connected())
    throw DataError("cyclic projection needs a connected graph (found " + std::to_string(op.component_count()) +
                    " components)");
  if (op.has_intercept()) {
    const Vector h = op.intercept_column();
    const auto sol = laplacian_solve(op, op.divergence(h), opts_);
    intercept_theta_ = sol.x;
    intercept_resid_ = h - op.gradient(sol.x);
    const double q2 = intercept_resid_.squaredNorm();
    // h inside col(X) (or h = 0): the intercept is not identifiable.
    intercept_norm2_ = q2 > 1e-12 * std::max(1.0, h.squaredNorm()) ? q2 : 0.0;
  }
}

CyclicProjection::Fit CyclicProjection::fit(const Vector& y) const {
  if (static_cast<Index>(y.size()) != op_->m()) throw UsageError("projection: expected m entries");
  const auto sol = laplacian_solve(*op_, op_->divergence(y), opts_);
  Fit f{sol.x, 0.0, y - op_->gradient(sol.x), sol.iterations};
  if (intercept_norm2_ > 0.0) {
    const double c = intercept_resid_.dot(y) / intercept_norm2_;
    f.intercept = c;
    f.theta -= c * intercept_theta_;
    f.residual -= c * intercept_resid_;
  }
  return f;
}

Vector CyclicProjection::apply(const Vector& v) const { return fit(v).residual; }

Index CyclicProjection::cyclic_dimension() const {
  return op_->m() - (op_->n() - 1) - (intercept_norm2_ > 0.0 ? 1 : 0);
}

Vector CyclicProjection::diagonal() const {
  // Dense pseudo-inverse of L0, one column per item.
  const Index n = op_->n();
  Matrix pinv(ei(n), ei(n));
  for (Index k = 0; k < n; ++k) {
    Vector e = Vector::Zero(ei(n));
    e[ei(k)] = 1.0;
    pinv.col(ei(k)) = laplacian_solve(*op_, e, opts_).x;
  }
  const auto& rows = op_->rows();
  Vector d(ei(rows.size()));
  for (Index r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const double quad = pinv(ei(row.i), ei(row.i)) + pinv(ei(row.j), ei(row.j)) - 2.0 * pinv(ei(row.i), ei(row.j));
    double v = 1.0 - row.scale * row.scale * quad;
    if (intercept_norm2_ > 0.0) v -= intercept_resid_[ei(r)] * intercept_resid_[ei(r)] / intercept_norm2_;
    d[ei(r)] = v;
  }
  return d;
}

Vector response(const DesignOperator& op, const ComparisonDataset& dataset) {
  if (dataset.m() != op.m()) throw UsageError("response: dataset and design disagree on m");
  return op.weighted(dataset.values());
}

RankingResult solve_l2(const CyclicProjection& proj, const Vector& y) {
  auto f = proj.fit(y);
  RankingResult res;
  res.theta = std::move(f.theta);
  if (proj.design().has_intercept()) res.intercept = f.intercept;
  res.residual_l2 = f.residual.norm();
  res.method = Method::l2;
  res.solver_iterations = f.iterations;
  return res;
}

RankingResult solve_l2(const DesignOperator& op, const Vector& y, const SolveOptions& opts) {
  return solve_l2(CyclicProjection(op, opts), y);
}

Vector project_cyclic(const CyclicProjection& proj, const Vector& v) { return proj.apply(v); }

double tsr(const ComparisonDataset& dataset) {
  const Index n = dataset.n();
  if (n < 3) throw DataError("TSR needs at least three items");
  // net[a][b] > 0: majority prefers a to b.
  std::vector<long> net(n * n, 0);
  std::vector<bool> seen(n * n, false);
  for (const auto& c : dataset.comparisons()) {
    const long s = c.value > 0 ? 1 : c.value < 0 ? -1 : 0;
    net[c.i * n + c.j] += s;
    net[c.j * n + c.i] -= s;
    seen[c.i * n + c.j] = seen[c.j * n + c.i] = true;
  }
  const auto& items = dataset.items();
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b) {
      if (!seen[a * n + b])
        throw DataError("TSR needs a complete tournament: pair (" + items.label(a) + ", " + items.label(b) +
                        ") is never compared");
      if (net[a * n + b] == 0)
        throw DataError("TSR: majority vote is tied on pair (" + items.label(a) + ", " + items.label(b) + ")");
    }
  std::size_t transitive = 0, total = 0;
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b)
      for (Index c = b + 1; c < n; ++c) {
        ++total;
        const bool ab = net[a * n + b] > 0, bc = net[b * n + c] > 0, ca = net[c * n + a] > 0;
        // A triangle is cyclic iff all three edges point the same way around it.
        if (!((ab && bc && ca) || (!ab && !bc && !ca))) ++transitive;
      }
  return static_cast<double>(transitive) / static_cast<double>(total);
}

}  // namespace robrank
