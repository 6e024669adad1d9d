#include <doctest.h>

#include <algorithm>
#include <iterator>
#include <random>

#include "oracle.hpp"
#include "robrank/error.hpp"
#include "robrank/lasso.hpp"
#include "robrank/simbench.hpp"

using namespace robrank;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

struct Instance {
  ComparisonDataset ds;
  DesignOperator op;
  Vector y;
};

Instance random_instance(std::mt19937_64& rng, Index n, Index m, double outlier_scale = 3.0) {
  const auto edges = oracle::random_connected_edges(rng, n, m);
  Vector y = oracle::random_normal(rng, m);
  std::uniform_int_distribution<Index> pick(0, m - 1);
  y[pick(rng)] += outlier_scale;
  auto ds = make_dataset(n, edges, std::vector<double>(y.data(), y.data() + y.size()));
  auto op = build_design(ds);
  return {std::move(ds), std::move(op), y};
}

}  // namespace

TEST_CASE("soft_threshold") {
  CHECK(soft_threshold(vec({3.0}), 1.0)[0] == 2.0);
  CHECK(soft_threshold(vec({-0.5}), 1.0)[0] == 0.0);
  CHECK(soft_threshold(vec({0.0}), 0.7)[0] == 0.0);
  CHECK(soft_threshold(vec({-4.0}), 1.5)[0] == -2.5);
  CHECK_THROWS_AS(soft_threshold(vec({1.0}), -1.0), UsageError);
}

TEST_CASE("lambda above lambda_max gives zero") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = random_instance(rng, 6, 14);
    const CyclicProjection proj(inst.op);
    const double lmax = lambda_max(proj, inst.y);
    CHECK(lmax == doctest::Approx(proj.apply(inst.y).cwiseAbs().maxCoeff()));
    const auto est = solve_lasso(proj, inst.y, lmax * 1.0001);
    CHECK(est.support.empty());
    CHECK(est.gamma.norm() == 0.0);
    CHECK(kkt_violation(proj, inst.y, lmax, Vector::Zero(14)) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(kkt_violation(proj, inst.y, lmax / 2, Vector::Zero(14)) == doctest::Approx(lmax / 2));
  }
}

TEST_CASE("cyclic triangle at lambda = 0.5") {
  const auto ds = make_dataset(3, std::vector<std::pair<Index, Index>>{{0, 1}, {1, 2}, {2, 0}}, std::vector<double>{1, 1, 1});
  const auto op = build_design(ds);
  const CyclicProjection proj(op);
  const Vector y = response(op, ds);
  const double lambda = 0.5;
  const auto est = solve_lasso(proj, y, lambda);
  CHECK(est.kkt_violation <= 1e-9);
  CHECK(est.converged);
  // P = u u^T with u = 1/sqrt(3): the 1-D reduction gives u^T gamma = sqrt(3) (1 - lambda).
  const Vector u = Vector::Ones(3) / std::sqrt(3.0);
  CHECK(u.dot(est.gamma) == doctest::Approx(std::sqrt(3.0) * (1 - lambda)).epsilon(1e-8));
  const double analytic = 0.5 * 3.0 * lambda * lambda + lambda * 3.0 * (1 - lambda);
  CHECK(est.objective == doctest::Approx(analytic).epsilon(1e-9));
  CHECK(est.objective == doctest::Approx(0.5 * std::pow(std::sqrt(3.0) - u.dot(est.gamma), 2) +
                                         lambda * est.gamma.cwiseAbs().sum())
                             .epsilon(1e-12));
}

TEST_CASE("solve_lasso matches the brute-force oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 15; ++trial) {
    const Index m = 8 + trial % 5;
    auto inst = random_instance(rng, 6, m);
    const CyclicProjection proj(inst.op);
    const Matrix P = oracle::dense_projection(oracle::dense_design(inst.op));
    const auto bf = oracle::brute_force_lasso(P, inst.y, 0.3);
    for (bool accelerate : {false, true}) {
      LassoOptions opts;
      opts.accelerate = accelerate;
      const auto est = solve_lasso(proj, inst.y, 0.3, opts);
      CHECK(est.objective == doctest::Approx(bf.objective).epsilon(1e-6));
      CHECK(est.objective >= bf.objective - 1e-9);
      CHECK(est.kkt_violation <= 1e-8);
      CHECK(std::abs(est.objective - lasso_objective(proj, inst.y, 0.3, est.gamma)) <= 1e-9 * std::max(1.0, est.objective));
    }
  }
}

TEST_CASE("support and objective bookkeeping") {
  std::mt19937_64 rng(5);
  auto inst = random_instance(rng, 10, 40, 6.0);
  const CyclicProjection proj(inst.op);
  const auto est = solve_lasso(proj, inst.y, 0.2);
  IndexSet support;
  for (Index r = 0; r < 40; ++r)
    if (est.gamma[r] != 0.0) support.push_back(r);
  CHECK(support == est.support);
  CHECK(est.kkt_violation == doctest::Approx(kkt_violation(proj, inst.y, 0.2, est.gamma)));
}

TEST_CASE("iteration cap returns a flagged iterate") {
  std::mt19937_64 rng(6);
  auto inst = random_instance(rng, 10, 40, 6.0);
  const CyclicProjection proj(inst.op);
  LassoOptions opts;
  opts.max_iter = 1;
  opts.tol = 1e-14;
  const auto est = solve_lasso(proj, inst.y, 0.05, opts);
  CHECK_FALSE(est.converged);
  CHECK(est.iterations == 1);
}

TEST_CASE("gauge invariance of the outlier estimate") {
  std::mt19937_64 rng(7);
  auto inst = random_instance(rng, 8, 30, 5.0);
  const CyclicProjection proj(inst.op);
  const Vector phi = oracle::random_normal(rng, 8);
  const Vector y2 = inst.y + inst.op.gradient(phi);
  const auto a = solve_lasso(proj, inst.y, 0.4);
  const auto b = solve_lasso(proj, y2, 0.4);
  CHECK(a.support == b.support);
  CHECK((a.gamma - b.gamma).norm() <= 1e-6);
}

TEST_CASE("objective decreases along plain proximal gradient iterates") {
  std::mt19937_64 rng(8);
  auto inst = random_instance(rng, 8, 30, 5.0);
  const CyclicProjection proj(inst.op);
  double previous = std::numeric_limits<double>::infinity();
  Vector warm = Vector::Zero(30);
  for (int k = 1; k <= 30; ++k) {
    LassoOptions opts;
    opts.max_iter = 1;
    opts.tol = 0.0;
    const auto est = solve_lasso(proj, inst.y, 0.3, opts, warm);
    CHECK(est.objective <= previous + 1e-12);
    previous = est.objective;
    warm = est.gamma;
  }
}

TEST_CASE("lasso_path basics") {
  SUBCASE("consistent data has empty supports") {
    const auto ds = make_dataset(3, std::vector<std::pair<Index, Index>>{{0, 1}, {1, 2}, {0, 2}}, std::vector<double>{1, 1, 2});
    const auto op = build_design(ds);
    const CyclicProjection proj(op);
    const auto path = lasso_path(proj, response(op, ds), std::vector<double>{1.0, 0.5, 0.1});
    for (const auto& p : path.points) CHECK(p.gamma.empty());
    CHECK(path.entered().empty());
  }
  SUBCASE("first entry is the largest projected coordinate") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
      auto inst = random_instance(rng, 8, 30, 4.0);
      const CyclicProjection proj(inst.op);
      const Vector py = proj.apply(inst.y);
      Eigen::Index top = 0;
      py.cwiseAbs().maxCoeff(&top);
      const auto path = lasso_path(proj, inst.y);
      CHECK(path.points.size() == 100);
      CHECK(path.points.front().param == doctest::Approx(py.cwiseAbs().maxCoeff()));
      CHECK(path.points.back().param == doctest::Approx(1e-3 * py.cwiseAbs().maxCoeff()));
      REQUIRE_FALSE(path.entered().empty());
      CHECK(detection_order(path).front() == static_cast<Index>(top));
      for (const auto& p : path.points) CHECK(p.kkt_violation <= 1e-8);
    }
  }
  SUBCASE("grid must be strictly decreasing") {
    std::mt19937_64 rng(3);
    auto inst = random_instance(rng, 5, 10);
    const CyclicProjection proj(inst.op);
    CHECK_THROWS_AS(lasso_path(proj, inst.y, std::vector<double>{1.0, 1.0}), UsageError);
    CHECK_THROWS_AS(lasso_path(proj, inst.y, std::vector<double>{0.5, 1.0}), UsageError);
  }
}

TEST_CASE("default grid") {
  const auto g = default_lambda_grid(2.0);
  REQUIRE(g.size() == 100);
  CHECK(g.front() == 2.0);
  CHECK(g.back() == doctest::Approx(2e-3));
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] < g[k - 1]);
}

TEST_CASE("entry order and top fraction") {
  RegularizationPath path;
  path.m = 6;
  path.terminal_dual = Vector::Zero(6);
  path.entry_order.assign(6, RegularizationPath::kNever);
  path.entry_step.assign(6, RegularizationPath::kNever);
  path.entry_magnitude.assign(6, 0.0);
  record_path_point(path, {3.0, 0, {}});
  record_path_point(path, {2.0, 1, {{4, 1.0}}});
  record_path_point(path, {1.0, 2, {{1, 0.5}, {4, 2.0}, {5, -0.7}}});
  record_path_point(path, {0.5, 3, {{0, 0.1}, {5, -1.0}}});
  path.terminal_dual << 0.1, 0.2, 0.9, 0.3, 1.0, 1.0;
  CHECK(path.entered() == IndexSet{4, 1, 5, 0});
  // Same step: larger entry magnitude first (5 entered at 0.7, 1 at 0.5).
  CHECK(detection_order(path) == IndexSet{4, 5, 1, 0, 2, 3});
  const Vector scores = detection_scores(path);
  CHECK(scores[4] == 6.0);
  CHECK(scores[3] == 1.0);
  CHECK(top_fraction(path, 1.0 / 6) == IndexSet{4});
  CHECK(top_fraction(path, 0.5) == IndexSet{4, 1, 5});
  CHECK(top_fraction(path, 1.0) == IndexSet{4, 1, 5, 0});
  CHECK_THROWS_AS(top_fraction(path, 0.0), UsageError);
  CHECK_THROWS_AS(top_fraction(RegularizationPath{}, 0.5), UsageError);
  CHECK(first_point_with_support(path, 2).param == 1.0);
  CHECK(first_point_with_support(path, 10).param == 0.5);
}

TEST_CASE("top 5 percent of 1200 comparisons") {
  const auto inst = gen_flip(30, 1200, 0.05, 1);
  const auto op = build_design(inst.dataset);
  const CyclicProjection proj(op);
  const auto path = lasso_path(proj, response(op, inst.dataset));
  CHECK(top_fraction(path, 0.05).size() == 60);
}

TEST_CASE("top fraction on Experiment-I data overlaps the planted flips") {
  const auto inst = gen_flip(16, 2000, 0.05, 12);
  const auto op = build_design(inst.dataset);
  const CyclicProjection proj(op);
  const auto path = lasso_path(proj, response(op, inst.dataset));
  auto top = top_fraction(path, 0.05);
  std::sort(top.begin(), top.end());
  IndexSet inter;
  std::set_intersection(top.begin(), top.end(), inst.truth_outliers.begin(), inst.truth_outliers.end(),
                        std::back_inserter(inter));
  const double jaccard = double(inter.size()) / double(top.size() + inst.truth_outliers.size() - inter.size());
  CHECK(jaccard >= 0.8);
}

TEST_CASE("refits") {
  SUBCASE("empty support equals least squares") {
    std::mt19937_64 rng(10);
    auto inst = random_instance(rng, 7, 20);
    const CyclicProjection proj(inst.op);
    const auto l2 = solve_l2(proj, inst.y);
    CHECK((refit_drop(inst.op, inst.y, {}).theta - l2.theta).norm() <= 1e-10);
    CHECK((refit_hlasso(proj, inst.y, Vector::Zero(20)).theta - l2.theta).norm() <= 1e-12);
    // Full residual as gamma is a fixed point of the corrected-data fit.
    const Vector resid = inst.y - inst.op.gradient(l2.theta);
    CHECK((refit_hlasso(proj, inst.y, resid).theta - l2.theta).norm() <= 1e-10);
    CHECK(refit_drop(inst.op, inst.y, {}).method == Method::lasso_l2);
    CHECK(refit_hlasso(proj, inst.y, resid).method == Method::hlasso);
  }
  SUBCASE("dropping a flipped duplicate restores consistency") {
    const auto ds = make_dataset(3, std::vector<std::pair<Index, Index>>{{0, 1}, {1, 2}, {0, 2}, {0, 1}},
                                 std::vector<double>{1, 1, 2, -1});
    const auto op = build_design(ds);
    const std::vector<Index> drop{3};
    const auto r = refit_drop(op, response(op, ds), drop);
    CHECK((r.theta - vec({1, 0, -1})).norm() <= 1e-12);
    CHECK(r.residual_l2 <= 1e-12);
  }
  SUBCASE("disconnecting drop is a data error") {
    const auto ds = make_dataset(3, std::vector<std::pair<Index, Index>>{{0, 1}, {1, 2}}, std::vector<double>{1, 1});
    const auto op = build_design(ds);
    const std::vector<Index> drop{1};
    CHECK_THROWS_AS(refit_drop(op, response(op, ds), drop), DataError);
  }
}
