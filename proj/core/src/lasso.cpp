#include "robrank/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "robrank/error.hpp"

namespace robrank {

namespace {

inline Eigen::Index ei(Index k) { return static_cast<Eigen::Index>(k); }

inline double shrink(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

IndexSet support_of(const Vector& gamma) {
  IndexSet s;
  for (Eigen::Index r = 0; r < gamma.size(); ++r)
    if (gamma[r] != 0.0) s.push_back(static_cast<Index>(r));
  return s;
}

// KKT violation from the gradient g = P gamma - P Y.
double kkt_from_gradient(const Vector& g, const Vector& gamma, double lambda) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < g.size(); ++r) {
    const double v = gamma[r] > 0.0   ? std::abs(g[r] + lambda)
                     : gamma[r] < 0.0 ? std::abs(g[r] - lambda)
                                      : std::max(0.0, std::abs(g[r]) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

OutlierEstimate run_lasso(const CyclicProjection& proj, const Vector& y, double lambda, const LassoOptions& opts,
                          const Vector* warm) {
  if (!(lambda > 0.0)) throw UsageError("solve_lasso: lambda must be positive");
  const Index m = proj.design().m();
  if (static_cast<Index>(y.size()) != m) throw UsageError("solve_lasso: response must have m entries");

  const Vector py = proj.apply(y);
  OutlierEstimate est;
  est.lambda = lambda;

  Vector gamma = Vector::Zero(ei(m));
  Vector pgamma = Vector::Zero(ei(m));
  if (warm != nullptr) {
    if (warm->size() != y.size()) throw UsageError("solve_lasso: warm start must have m entries");
    gamma = *warm;
    if (gamma.any()) pgamma = proj.apply(gamma);
  } else if (lambda >= py.cwiseAbs().maxCoeff()) {
    est.gamma = gamma;
    est.objective = 0.5 * py.squaredNorm();
    est.kkt_violation = 0.0;
    return est;
  }

  Vector prev = gamma, pprev = pgamma;
  double momentum = 1.0;
  Index it = 0;
  for (;; ++it) {
    const Vector g = pgamma - py;
    est.kkt_violation = kkt_from_gradient(g, gamma, lambda);
    if (est.kkt_violation <= opts.tol) break;
    if (it == opts.max_iter) {
      est.converged = false;
      break;
    }
    Vector next(ei(m));
    if (opts.accelerate) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double beta = (momentum - 1.0) / t_next;
      const Vector ext = gamma + beta * (gamma - prev);
      const Vector pext = pgamma + beta * (pgamma - pprev);
      const Vector step = ext - (pext - py);
      for (Eigen::Index r = 0; r < next.size(); ++r) next[r] = shrink(step[r], lambda);
      // Gradient-based restart when the step opposes the momentum direction.
      if ((ext - next).dot(next - gamma) > 0.0) momentum = 1.0;
      else momentum = t_next;
    } else {
      const Vector step = gamma - g;
      for (Eigen::Index r = 0; r < next.size(); ++r) next[r] = shrink(step[r], lambda);
    }
    prev = std::move(gamma);
    pprev = std::move(pgamma);
    gamma = std::move(next);
    pgamma = proj.apply(gamma);
  }
  est.iterations = it;
  est.objective = 0.5 * (py - pgamma).squaredNorm() + lambda * gamma.lpNorm<1>();
  est.support = support_of(gamma);
  est.gamma = std::move(gamma);
  return est;
}

}  // namespace

Vector soft_threshold(const Vector& v, double t) {
  if (t < 0.0) throw UsageError("soft_threshold: threshold must be non-negative");
  Vector out(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) out[k] = shrink(v[k], t);
  return out;
}

double lasso_objective(const CyclicProjection& proj, const Vector& y, double lambda, const Vector& gamma) {
  return 0.5 * proj.apply(y - gamma).squaredNorm() + lambda * gamma.lpNorm<1>();
}

double kkt_violation(const CyclicProjection& proj, const Vector& y, double lambda, const Vector& gamma) {
  const Vector g = -proj.apply(y - gamma);
  return kkt_from_gradient(g, gamma, lambda);
}

OutlierEstimate solve_lasso(const CyclicProjection& proj, const Vector& y, double lambda, const LassoOptions& opts) {
  return run_lasso(proj, y, lambda, opts, nullptr);
}

OutlierEstimate solve_lasso(const CyclicProjection& proj, const Vector& y, double lambda, const LassoOptions& opts,
                            const Vector& warm_start) {
  return run_lasso(proj, y, lambda, opts, &warm_start);
}

double lambda_max(const CyclicProjection& proj, const Vector& y) { return proj.apply(y).cwiseAbs().maxCoeff(); }

SparseGamma to_sparse(const Vector& gamma) {
  SparseGamma out;
  for (Eigen::Index r = 0; r < gamma.size(); ++r)
    if (gamma[r] != 0.0) out.emplace_back(static_cast<Index>(r), gamma[r]);
  return out;
}

Vector to_dense(const SparseGamma& gamma, Index m) {
  Vector out = Vector::Zero(ei(m));
  for (const auto& [r, v] : gamma) out[ei(r)] = v;
  return out;
}

IndexSet RegularizationPath::entered() const {
  IndexSet out;
  for (Index r = 0; r < entry_order.size(); ++r)
    if (entry_order[r] != kNever) out.push_back(r);
  std::stable_sort(out.begin(), out.end(), [&](Index a, Index b) { return entry_order[a] < entry_order[b]; });
  return out;
}

void record_path_point(RegularizationPath& path, PathPoint point) {
  if (path.entry_order.size() != path.m) {
    path.entry_order.assign(path.m, RegularizationPath::kNever);
    path.entry_step.assign(path.m, RegularizationPath::kNever);
    path.entry_magnitude.assign(path.m, 0.0);
  }
  const Index idx = path.points.size();
  for (const auto& [r, v] : point.gamma) {
    if (path.entry_order[r] == RegularizationPath::kNever) {
      path.entry_order[r] = idx;
      path.entry_step[r] = point.step;
      path.entry_magnitude[r] = std::abs(v);
    }
  }
  path.points.push_back(std::move(point));
}

std::vector<double> default_lambda_grid(double lambda_max, Index points, double floor_ratio) {
  if (!(lambda_max > 0.0)) return {};
  if (points < 2) return {lambda_max};
  std::vector<double> grid(points);
  const double step = std::log(floor_ratio) / static_cast<double>(points - 1);
  for (Index k = 0; k < points; ++k) grid[k] = lambda_max * std::exp(step * static_cast<double>(k));
  return grid;
}

RegularizationPath lasso_path(const CyclicProjection& proj, const Vector& y, std::optional<std::vector<double>> grid,
                              const LassoOptions& opts) {
  const Index m = proj.design().m();
  RegularizationPath path;
  path.parameter = PathParameter::lambda;
  path.m = m;
  path.entry_order.assign(m, RegularizationPath::kNever);
  path.entry_step.assign(m, RegularizationPath::kNever);
  path.entry_magnitude.assign(m, 0.0);
  path.terminal_dual = Vector::Zero(ei(m));

  const Vector py = proj.apply(y);
  const double lmax = py.cwiseAbs().maxCoeff();
  std::vector<double> lambdas = grid ? std::move(*grid) : default_lambda_grid(lmax);
  for (Index k = 1; k < lambdas.size(); ++k)
    if (!(lambdas[k] < lambdas[k - 1])) throw UsageError("lasso_path: lambda grid must be strictly decreasing");
  if (lambdas.empty()) return path;  // P Y = 0: nothing ever enters

  Vector gamma = Vector::Zero(ei(m));
  for (Index k = 0; k < lambdas.size(); ++k) {
    auto est = solve_lasso(proj, y, lambdas[k], opts, gamma);
    gamma = est.gamma;
    record_path_point(path, {lambdas[k], k, to_sparse(est.gamma), est.objective, est.kkt_violation});
  }
  const Vector g = proj.apply(y - gamma);
  path.terminal_dual = (g.cwiseAbs() / lambdas.back()).cwiseMin(1.0);
  return path;
}

IndexSet detection_order(const RegularizationPath& path) {
  const Index m = path.m;
  IndexSet order(m);
  std::iota(order.begin(), order.end(), Index{0});
  if (path.entry_step.size() != m) return order;
  auto dual = [&](Index r) { return path.terminal_dual.size() ? path.terminal_dual[ei(r)] : 0.0; };
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const Index ea = path.entry_step[a], eb = path.entry_step[b];
    if (ea != eb) return ea < eb;
    if (ea != RegularizationPath::kNever) {
      if (path.entry_magnitude[a] != path.entry_magnitude[b]) return path.entry_magnitude[a] > path.entry_magnitude[b];
    } else if (dual(a) != dual(b)) {
      return dual(a) > dual(b);
    }
    return a < b;
  });
  return order;
}

Vector detection_scores(const RegularizationPath& path) {
  const IndexSet order = detection_order(path);
  Vector score(ei(path.m));
  for (Index pos = 0; pos < order.size(); ++pos) score[ei(order[pos])] = static_cast<double>(path.m - pos);
  return score;
}

IndexSet top_fraction(const RegularizationPath& path, double p) {
  if (path.empty()) throw UsageError("top_fraction: path is empty");
  if (!(p > 0.0 && p <= 1.0)) throw UsageError("top_fraction: fraction must lie in (0, 1]");
  const auto count = static_cast<Index>(std::ceil(p * static_cast<double>(path.m) - 1e-9));
  IndexSet entered = path.entered();
  if (entered.size() > count) entered.resize(count);
  return entered;
}

const PathPoint& first_point_with_support(const RegularizationPath& path, Index count) {
  if (path.empty()) throw UsageError("path is empty");
  for (const auto& pt : path.points)
    if (pt.gamma.size() >= count) return pt;
  return path.points.back();
}

RankingResult refit_hlasso(const CyclicProjection& proj, const Vector& y, const Vector& gamma) {
  auto res = solve_l2(proj, y - gamma);
  res.method = Method::hlasso;
  return res;
}

RankingResult refit_drop(const DesignOperator& op, const Vector& y, std::span<const Index> support,
                         const SolveOptions& opts) {
  if (static_cast<Index>(y.size()) != op.m()) throw UsageError("refit_drop: response must have m entries");
  const DesignOperator reduced = op.without_rows(support);
  if (!reduced.connected())
    throw DataError("dropping " + std::to_string(support.size()) + " comparisons disconnects the graph into " +
                    std::to_string(reduced.component_count()) + " components");
  std::vector<bool> gone(op.m(), false);
  for (Index r : support) gone[r] = true;
  Vector kept(ei(reduced.m()));
  Eigen::Index k = 0;
  for (Index r = 0; r < op.m(); ++r)
    if (!gone[r]) kept[k++] = y[ei(r)];
  auto res = solve_l2(reduced, kept, opts);
  res.method = Method::lasso_l2;
  return res;
}

}  // namespace robrank
