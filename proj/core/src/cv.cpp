#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/QR>

#include "robrank/error.hpp"
#include "robrank/lasso.hpp"

namespace robrank {

namespace {

inline Eigen::Index ei(Index k) { return static_cast<Eigen::Index>(k); }

inline double shrink(double v, double t) { return v > t ? v - t : v < -t ? v + t : 0.0; }

// Covariance coordinate descent for 1/2 g^T G g - c^T g + lambda ||g||_1,
// warm-started from `gamma` (q caches G gamma). Sweeps the working set
// `work` to convergence, then adds any coordinate violating the optimality
// conditions and repeats.
void coordinate_descent(const Matrix& G, const Vector& c, double lambda, std::vector<Eigen::Index> work,
                        Vector& gamma, Vector& q) {
  const Eigen::Index m = G.rows();
  const double tol = 1e-5 * std::max(1.0, c.cwiseAbs().maxCoeff());
  constexpr int kMaxSweeps = 100000;
  std::vector<char> in_work(static_cast<std::size_t>(m), 0);
  for (auto j : work) in_work[static_cast<std::size_t>(j)] = 1;
  for (int round = 0; round < kMaxSweeps; ++round) {
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      double biggest = 0.0;
      for (auto j : work) {
        const double gjj = G(j, j);
        if (gjj <= 0.0) continue;
        const double old = gamma[j];
        const double next = shrink(c[j] - q[j] + gjj * old, lambda) / gjj;
        if (next != old) {
          q.noalias() += (next - old) * G.col(j);
          gamma[j] = next;
          biggest = std::max(biggest, std::abs(next - old) * std::sqrt(gjj));
        }
      }
      if (biggest <= tol) break;
    }
    bool added = false;
    for (Eigen::Index j = 0; j < m; ++j)
      if (!in_work[static_cast<std::size_t>(j)] && std::abs(c[j] - q[j]) > lambda + tol) {
        in_work[static_cast<std::size_t>(j)] = 1;
        work.push_back(j);
        added = true;
      }
    if (!added) return;
  }
}

}  // namespace

CvResult cv_lambda(const CyclicProjection& proj, const Vector& y, Index folds, std::optional<std::vector<double>> grid,
                   std::uint64_t seed) {
  if (folds < 2) throw UsageError("cv_lambda: need at least 2 folds (got " + std::to_string(folds) + ")");
  const Index l = proj.cyclic_dimension();
  if (l < folds)
    throw DataError("cv_lambda: cyclic dimension " + std::to_string(l) + " is smaller than the fold count " +
                    std::to_string(folds));
  const Index m = proj.design().m();
  constexpr Index kMaxComparisons = 8000;
  if (m > kMaxComparisons)
    throw UsageError("cv_lambda: dense probe Gram matrices are limited to m <= " + std::to_string(kMaxComparisons));

  CvResult out;
  out.grid = grid ? std::move(*grid) : default_lambda_grid(lambda_max(proj, y), 40, 1e-2);
  for (Index k = 1; k < out.grid.size(); ++k)
    if (!(out.grid[k] < out.grid[k - 1])) throw UsageError("cv_lambda: lambda grid must be strictly decreasing");
  if (out.grid.empty()) throw DataError("cv_lambda: P Y = 0, nothing to select");

  // Random orthonormal basis of the cyclic space: rows of W are the
  // orthonormalised columns of P G with G ~ N(0, I).
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix PG(ei(m), ei(l));
  for (Index k = 0; k < l; ++k) {
    Vector g(ei(m));
    for (Eigen::Index r = 0; r < g.size(); ++r) g[r] = normal(rng);
    PG.col(ei(k)) = proj.apply(g);
  }
  const Eigen::HouseholderQR<Matrix> qr(PG);
  const Matrix W = (qr.householderQ() * Matrix::Identity(ei(m), ei(l))).transpose();
  PG.resize(0, 0);
  std::vector<Index> perm(l);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Index> fold_of(l);
  for (Index k = 0; k < l; ++k) fold_of[perm[k]] = k % folds;

  const Matrix gram_all = W.transpose() * W;
  out.fold_losses = Matrix::Zero(ei(out.grid.size()), ei(folds));
  for (Index f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train_rows, val_rows;
    for (Index k = 0; k < l; ++k) (fold_of[k] == f ? val_rows : train_rows).push_back(ei(k));
    const Matrix Wv = W(val_rows, Eigen::all);
    // l/|T| ||W_T v||^2 estimates ||P v||^2, so the training problem is solved at lambda |T| / l.
    const double scale = static_cast<double>(train_rows.size()) / static_cast<double>(l);
    Matrix G = gram_all;
    G.noalias() -= Wv.transpose() * Wv;
    const Vector c = G * y;
    const Vector wvy = Wv * y;
    const auto n_val = static_cast<double>(val_rows.size());
    Vector gamma = Vector::Zero(ei(m));
    Vector q = Vector::Zero(ei(m));
    double previous = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < out.grid.size(); ++k) {
      const double lambda = out.grid[k] * scale;
      // Sequential strong rule for the initial working set.
      const double screen = std::isfinite(previous) ? 2.0 * lambda - previous : lambda;
      std::vector<Eigen::Index> work;
      for (Eigen::Index j = 0; j < ei(m); ++j)
        if (gamma[j] != 0.0 || std::abs(c[j] - q[j]) >= screen) work.push_back(j);
      coordinate_descent(G, c, lambda, std::move(work), gamma, q);
      out.fold_losses(ei(k), ei(f)) = (wvy - Wv * gamma).squaredNorm() / n_val;
      previous = lambda;
    }
  }

  const Index ng = out.grid.size();
  out.mean_loss.resize(ng);
  out.se_loss.resize(ng);
  Index best = 0;
  for (Index k = 0; k < ng; ++k) {
    const auto row = out.fold_losses.row(ei(k));
    const double mean = row.mean();
    const double var = folds > 1 ? (row.array() - mean).square().sum() / static_cast<double>(folds - 1) : 0.0;
    out.mean_loss[k] = mean;
    out.se_loss[k] = std::sqrt(var / static_cast<double>(folds));
    if (mean < out.mean_loss[best]) best = k;
  }
  out.lambda = out.grid[best];
  const double threshold = out.mean_loss[best] + out.se_loss[best];
  out.lambda_1se = out.lambda;
  for (Index k = 0; k <= best; ++k)
    if (out.mean_loss[k] <= threshold) {
      out.lambda_1se = out.grid[k];
      break;
    }
  return out;
}

}  // namespace robrank
