#include <doctest.h>

#include <random>
#include <sstream>

#include "oracle.hpp"
#include "robrank/error.hpp"
#include "robrank/hodge.hpp"
#include "robrank/simbench.hpp"

using namespace robrank;

namespace {

ComparisonDataset dataset(Index n, const std::vector<std::pair<Index, Index>>& edges, const std::vector<double>& y) {
  return make_dataset(n, edges, y);
}

const std::vector<std::pair<Index, Index>> kTriangle{{0, 1}, {1, 2}, {2, 0}};
const std::vector<std::pair<Index, Index>> kChain{{0, 1}, {1, 2}};

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

ComparisonDataset random_instance(std::mt19937_64& rng, Index n, Index m) {
  const auto edges = oracle::random_connected_edges(rng, n, m);
  const Vector y = oracle::random_normal(rng, m);
  return dataset(n, edges, std::vector<double>(y.data(), y.data() + y.size()));
}

}  // namespace

TEST_CASE("laplacian_solve on the triangle") {
  const auto op = build_design(dataset(3, kTriangle, {1, 1, 1}));
  for (auto backend : {LaplacianBackend::conjugate_gradient, LaplacianBackend::dense}) {
    SolveOptions opts;
    opts.backend = backend;
    const auto sol = laplacian_solve(op, vec({1, -1, 0}), opts);
    CHECK((sol.x - vec({1.0 / 3, -1.0 / 3, 0})).norm() <= 1e-12);
    const auto ones = laplacian_solve(op, Vector::Ones(3), opts);
    CHECK(ones.x.norm() <= 1e-14);
  }
}

TEST_CASE("laplacian_solve matches the dense pseudo-inverse") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 8, m = 8 + trial;
    const auto op = build_design(random_instance(rng, n, m));
    const Matrix Lp = oracle::pinv_symmetric(oracle::dense_design(op).transpose() * oracle::dense_design(op));
    Vector b = oracle::random_normal(rng, n);
    const Vector expect = Lp * b;
    for (auto backend : {LaplacianBackend::conjugate_gradient, LaplacianBackend::dense}) {
      SolveOptions opts;
      opts.backend = backend;
      const auto sol = laplacian_solve(op, b, opts);
      CHECK((sol.x - expect).norm() <= 1e-8 * std::max(1.0, expect.norm()));
      CHECK(std::abs(sol.x.sum()) <= 1e-10);
    }
  }
}

TEST_CASE("laplacian_solve errors") {
  const auto disconnected = build_design(dataset(4, {{0, 1}, {2, 3}}, {1, 1}));
  CHECK_THROWS_AS(laplacian_solve(disconnected, vec({1, -1, 0, 0})), DataError);
  std::mt19937_64 rng(5);
  const auto op = build_design(random_instance(rng, 40, 80));
  SolveOptions opts;
  opts.backend = LaplacianBackend::conjugate_gradient;
  opts.max_iter = 1;
  opts.tol = 1e-14;
  Vector b = oracle::random_normal(rng, 40);
  CHECK_THROWS_AS(laplacian_solve(op, b, opts), NumericalError);
}

TEST_CASE("solve_l2 examples") {
  SUBCASE("consistent chain") {
    const auto ds = dataset(3, kChain, {1, 1});
    const auto op = build_design(ds);
    const auto r = solve_l2(op, response(op, ds));
    CHECK((r.theta - vec({1, 0, -1})).norm() <= 1e-12);
    CHECK(r.residual_l2 <= 1e-12);
    CHECK(r.method == Method::l2);
    CHECK_FALSE(r.intercept.has_value());
  }
  SUBCASE("cyclic triangle") {
    const auto ds = dataset(3, kTriangle, {1, 1, 1});
    const auto op = build_design(ds);
    const auto r = solve_l2(op, response(op, ds));
    CHECK(r.theta.norm() <= 1e-12);
    CHECK(r.residual_l2 == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  }
}

TEST_CASE("solve_l2 recovers a planted home advantage") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = gen_sports(30, 1200, 1.0, 3.0, seed);
    const auto op = build_design(inst.dataset, true);
    const auto r = solve_l2(op, response(op, inst.dataset));
    REQUIRE(r.intercept.has_value());
    CHECK(std::abs(*r.intercept - 3.0) <= 0.15);
    // Residual bookkeeping.
    Vector full(31);
    full.head(30) = r.theta;
    full[30] = *r.intercept;
    CHECK(std::abs((response(op, inst.dataset) - op.apply(full)).norm() - r.residual_l2) <= 1e-9);
  }
}

TEST_CASE("intercept fit matches dense least squares") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = gen_sports(6, 25, 1.0, 2.0, 100 + trial);
    const auto op = build_design(inst.dataset, true);
    const Vector y = response(op, inst.dataset);
    const auto r = solve_l2(op, y);
    const Matrix X = oracle::dense_design(op);
    const Vector beta = oracle::pinv_svd(X) * y;
    CHECK(std::abs(beta[6] - *r.intercept) <= 1e-8);
    Vector theta = beta.head(6);
    theta.array() -= theta.mean();
    CHECK((theta - r.theta).norm() <= 1e-8);
  }
}

TEST_CASE("project_cyclic examples") {
  {
    const auto op = build_design(dataset(3, kChain, {1, 1}));
    const CyclicProjection proj(op);
    CHECK(project_cyclic(proj, vec({1, 1})).norm() <= 1e-12);
    CHECK(proj.cyclic_dimension() == 0);
  }
  {
    const auto op = build_design(dataset(3, kTriangle, {1, 1, 1}));
    const CyclicProjection proj(op);
    CHECK((project_cyclic(proj, vec({1, 1, 1})) - vec({1, 1, 1})).norm() <= 1e-12);
    CHECK(proj.cyclic_dimension() == 1);
  }
}

TEST_CASE("projection matches the dense oracle and is idempotent") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 8;
    const auto ds = random_instance(rng, n, 10 + trial);
    const auto op = build_design(ds);
    const CyclicProjection proj(op);
    const Matrix P = oracle::dense_projection(oracle::dense_design(op));
    const Vector v = oracle::random_normal(rng, op.m());
    const Vector pv = proj.apply(v);
    CHECK((pv - P * v).norm() <= 1e-8 * v.norm());
    CHECK((proj.apply(pv) - pv).norm() <= 1e-8 * v.norm());
    const Vector theta = oracle::random_normal(rng, n);
    CHECK(std::abs(pv.dot(op.apply(theta))) <= 1e-8 * v.norm() * theta.norm() * 10);
    CHECK((proj.diagonal() - P.diagonal()).norm() <= 1e-8);
  }
}

TEST_CASE("projection with an intercept matches the dense oracle") {
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = gen_sports(5, 20, 1.0, 1.0, 40 + trial);
    const auto op = build_design(inst.dataset, true);
    const CyclicProjection proj(op);
    REQUIRE(proj.intercept_identifiable());
    const Matrix P = oracle::dense_projection(oracle::dense_design(op));
    std::mt19937_64 rng(trial);
    const Vector v = oracle::random_normal(rng, op.m());
    CHECK((proj.apply(v) - P * v).norm() <= 1e-8 * v.norm());
    CHECK((proj.diagonal() - P.diagonal()).norm() <= 1e-8);
    CHECK(proj.cyclic_dimension() == op.m() - op.n());
  }
}

TEST_CASE("Hodge decomposition invariants") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 3 + trial;
    const auto ds = random_instance(rng, n, 2 * n + 3);
    const auto op = build_design(ds);
    const CyclicProjection proj(op);
    const Vector y = response(op, ds);
    const auto r = solve_l2(proj, y);
    const Vector grad = op.gradient(r.theta);
    const Vector res = y - grad;
    CHECK(std::abs(grad.dot(res)) <= 1e-8 * y.squaredNorm());
    CHECK(std::abs(y.squaredNorm() - grad.squaredNorm() - proj.apply(y).squaredNorm()) <= 1e-8 * y.squaredNorm());
    CHECK(std::abs(r.theta.sum()) <= 1e-9 * double(n) * r.theta.cwiseAbs().maxCoeff());
    CHECK(std::abs(res.norm() - r.residual_l2) <= 1e-9 * (1 + y.norm()));

    // Adding a gradient flow shifts theta and leaves PY unchanged.
    Vector phi = oracle::random_normal(rng, n);
    const Vector y2 = y + op.gradient(phi);
    const auto r2 = solve_l2(proj, y2);
    phi.array() -= phi.mean();
    CHECK((r2.theta - r.theta - phi).norm() <= 1e-8 * (1 + phi.norm()));
    CHECK((proj.apply(y2) - proj.apply(y)).norm() <= 1e-8 * (1 + y.norm()));
  }
}

TEST_CASE("gauge invariance of generated scores") {
  const auto inst = gen_gaussian(10, 60, 0.5, 0.0, 0.0, 3);
  // Shift every true score by a constant: the differences, and hence Y, do not change.
  Vector shifted = inst.truth_theta.array() + 5.0;
  const auto op = build_design(inst.dataset);
  Vector y(op.m());
  for (Index r = 0; r < op.m(); ++r) {
    const auto& c = inst.dataset[r];
    y[r] = shifted[c.i] - shifted[c.j];
  }
  Vector y0(op.m());
  for (Index r = 0; r < op.m(); ++r) {
    const auto& c = inst.dataset[r];
    y0[r] = inst.truth_theta[c.i] - inst.truth_theta[c.j];
  }
  CHECK((solve_l2(op, y).theta - solve_l2(op, y0).theta).norm() <= 1e-10);
  CHECK((solve_l2(op, y0).theta - inst.truth_theta).norm() <= 1e-8);
}

TEST_CASE("CG and dense backends agree on larger graphs") {
  std::mt19937_64 rng(8);
  const auto ds = random_instance(rng, 120, 600);
  const auto op = build_design(ds);
  REQUIRE(op.dense_factor() != nullptr);
  const Vector y = response(op, ds);
  SolveOptions cg;
  cg.backend = LaplacianBackend::conjugate_gradient;
  SolveOptions dense;
  dense.backend = LaplacianBackend::dense;
  CHECK((solve_l2(op, y, cg).theta - solve_l2(op, y, dense).theta).norm() <= 1e-8);
}

TEST_CASE("tsr examples") {
  auto make = [](Index n, std::vector<std::pair<Index, Index>> wins) {
    return dataset(n, wins, std::vector<double>(wins.size(), 1.0));
  };
  CHECK(tsr(make(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}})) == 1.0);
  CHECK(tsr(make(3, {{0, 1}, {1, 2}, {2, 0}})) == 0.0);
  // 1 > 2 > 3 > 1 with 0 beating everyone: only the triple {1, 2, 3} is cyclic.
  CHECK(tsr(make(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {2, 3}, {3, 1}})) == doctest::Approx(0.75));
  // Majority votes with repeated comparisons; negative values flip the winner.
  CHECK(tsr(dataset(3, {{0, 1}, {1, 0}, {0, 1}, {1, 2}, {0, 2}}, {1, 1, 1, 1, -1})) == 0.0);
  CHECK_THROWS_AS(tsr(make(3, {{0, 1}, {1, 2}})), DataError);
  CHECK_THROWS_AS(tsr(dataset(3, {{0, 1}, {0, 1}, {1, 2}, {0, 2}}, {1, -1, 1, 1})), DataError);
}
