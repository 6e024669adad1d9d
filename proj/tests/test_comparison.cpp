#include <doctest.h>

#include <random>
#include <sstream>

#include "oracle.hpp"
#include "robrank/comparison.hpp"
#include "robrank/design.hpp"
#include "robrank/error.hpp"

using namespace robrank;

namespace {

ComparisonDataset parse(const std::string& text) {
  std::istringstream in(text);
  return load_csv(in);
}

ComparisonDataset edges_dataset(Index n, const std::vector<std::pair<Index, Index>>& edges) {
  std::vector<double> values(edges.size(), 1.0);
  return make_dataset(n, edges, values);
}

}  // namespace

TEST_CASE("load_csv parses a minimal file") {
  const auto ds = parse("item_i,item_j,value\na,b,1\nb,c,1\n");
  CHECK(ds.n() == 3);
  CHECK(ds.m() == 2);
  CHECK(ds.items().label(0) == "a");
  CHECK(ds.items().label(2) == "c");
  CHECK(ds[1].i == 1);
  CHECK(ds[1].j == 2);
  CHECK_FALSE(ds.has_intercept_info());
  CHECK_FALSE(ds.has_rater_info());
}

TEST_CASE("load_csv rejects self comparisons with the line number") {
  try {
    parse("item_i,item_j,value\na,b,1\na,a,1\n");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("self") != std::string::npos);
  }
}

TEST_CASE("load_csv rejects malformed input") {
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(parse("item_i,item_j,value\n"), DataError);
  CHECK_THROWS_AS(parse("item_i,item_j\na,b\n"), DataError);
  CHECK_THROWS_AS(parse("item_i,item_j,value\na,b,abc\n"), DataError);
  CHECK_THROWS_AS(parse("item_i,item_j,value\na,b,nan\n"), DataError);
  CHECK_THROWS_AS(parse("item_i,item_j,value\na,b\n"), DataError);
  CHECK_THROWS_AS(parse("item_i,item_j,value,weight\na,b,1,-2\n"), DataError);
  CHECK_THROWS_AS(parse("item_i,item_j,value,host\na,b,1,x\n"), DataError);
}

TEST_CASE("load_csv captures optional columns and ignores unknown ones") {
  const auto ds = parse(
      "extra,item_j,item_i,value,rater,weight,host\n"
      "z,b,a,2.5,r1,2,i\n"
      "z,c,b,-1,\"r,2\",1,j\n"
      "z,a,c,0,r3,1,none\n");
  REQUIRE(ds.m() == 3);
  CHECK(ds.items().label(ds[0].i) == "a");
  CHECK(ds.items().label(ds[0].j) == "b");
  CHECK(ds[0].value == 2.5);
  CHECK(ds[0].weight == 2.0);
  CHECK(ds[0].host == Host::i);
  CHECK(ds[1].host == Host::j);
  CHECK(ds[2].host == Host::none);
  CHECK(*ds[1].rater == "r,2");
  CHECK(ds.has_intercept_info());
  CHECK(ds.has_rater_info());
}

TEST_CASE("a 1230-row file with a host column") {
  std::ostringstream text;
  text << "item_i,item_j,value,host\n";
  for (int g = 0; g < 1230; ++g) {
    const int a = g % 30, b = (g / 30 + 1 + a) % 30;
    text << "T" << a << ",T" << (b == a ? (a + 1) % 30 : b) << ',' << (g % 7) - 3 << ',' << (g % 2 ? "i" : "j") << '\n';
  }
  const auto ds = parse(text.str());
  CHECK(ds.m() == 1230);
  CHECK(ds.n() == 30);
  CHECK(ds.has_intercept_info());
}

TEST_CASE("CSV round trip reproduces the dataset") {
  const auto ds = parse(
      "item_i,item_j,value,rater,weight,host\n"
      "alpha,\"be,ta\",0.1,r1,1.5,i\n"
      "\"be,ta\",gamma,-3.25e-7,,1,j\n"
      "gamma,alpha,1e300,r2,0.25,none\n");
  std::ostringstream out;
  write_csv(out, ds);
  std::istringstream in(out.str());
  const auto back = load_csv(in);
  CHECK(back == ds);
}

TEST_CASE("item map lists labels by first appearance") {
  const auto ds = parse("item_i,item_j,value\nq,p,1\np,r,1\n");
  std::ostringstream out;
  write_item_map(out, ds.items());
  CHECK(out.str() == "label,index\nq,0\np,1\nr,2\n");
}

TEST_CASE("dichotomous detection excludes ties") {
  CHECK(parse("item_i,item_j,value\na,b,1\nb,c,-1\n").is_dichotomous());
  CHECK_FALSE(parse("item_i,item_j,value\na,b,1\nb,c,0\n").is_dichotomous());
  CHECK_FALSE(parse("item_i,item_j,value\na,b,2\n").is_dichotomous());
}

TEST_CASE("build_design on small graphs") {
  SUBCASE("single row") {
    const auto op = build_design(edges_dataset(2, {{0, 1}}));
    const Matrix X = oracle::dense_design(op);
    CHECK(X(0, 0) == 1.0);
    CHECK(X(0, 1) == -1.0);
  }
  SUBCASE("triangle Laplacian") {
    const auto op = build_design(edges_dataset(3, {{0, 1}, {1, 2}, {2, 0}}));
    const Matrix L = op.laplacian().to_dense();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) CHECK(L(a, b) == (a == b ? 2.0 : -1.0));
  }
  SUBCASE("duplicated edge") {
    const auto op = build_design(edges_dataset(2, {{0, 1}, {0, 1}}));
    const Matrix L = op.laplacian().to_dense();
    CHECK(L(0, 0) == 2.0);
    CHECK(L(1, 1) == 2.0);
    CHECK(L(0, 1) == -2.0);
    CHECK(L(1, 0) == -2.0);
    CHECK(op.m() == 2);
  }
  SUBCASE("intercept requires host data") {
    CHECK_THROWS_AS(build_design(edges_dataset(2, {{0, 1}}), true), DataError);
  }
  SUBCASE("empty dataset") { CHECK_THROWS_AS(build_design(ComparisonDataset(ItemTable({"a", "b"}), {})), DataError); }
}

TEST_CASE("design_apply forward and adjoint") {
  const auto op = build_design(edges_dataset(2, {{0, 1}}));
  Vector theta(2);
  theta << 1.0, 0.0;
  CHECK(design_apply(op, theta, false)[0] == 1.0);
  Vector e(1);
  e << 1.0;
  const Vector adj = design_apply(op, e, true);
  CHECK(adj[0] == 1.0);
  CHECK(adj[1] == -1.0);
  CHECK_THROWS_AS(design_apply(op, Vector::Zero(3), false), UsageError);
  CHECK_THROWS_AS(design_apply(op, Vector::Zero(2), true), UsageError);
}

TEST_CASE("adjoint of forward equals the dense Laplacian product") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 9;
    const auto edges = oracle::random_connected_edges(rng, n, n + 3 * (trial % 4));
    const auto op = build_design(edges_dataset(n, edges));
    const Matrix X = oracle::dense_design(op);
    const Vector v = oracle::random_normal(rng, n);
    const Vector got = op.adjoint(op.apply(v));
    CHECK((got - X.transpose() * X * v).norm() <= 1e-12 * (1.0 + v.norm()));
    CHECK((op.laplacian_apply(v) - X.transpose() * X * v).norm() <= 1e-12 * (1.0 + v.norm()));
  }
}

TEST_CASE("adjoint identity <X theta, y> = <theta, X^T y>") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial * 5;
    const auto edges = oracle::random_connected_edges(rng, n, 3 * n);
    const auto op = build_design(edges_dataset(n, edges));
    const Vector theta = oracle::random_normal(rng, n);
    const Vector y = oracle::random_normal(rng, op.m());
    const double lhs = op.apply(theta).dot(y), rhs = theta.dot(op.adjoint(y));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)) * 10);
  }
}

TEST_CASE("forward product of the ones vector is the intercept column") {
  const auto ds = parse("item_i,item_j,value,host\na,b,1,i\nb,c,1,j\nc,a,2,none\n");
  const auto plain = build_design(ds, false);
  CHECK(plain.apply(Vector::Ones(3)).norm() == 0.0);
  const auto op = build_design(ds, true);
  Vector ones = Vector::Zero(4);
  ones.head(3).setOnes();
  CHECK(op.apply(ones).norm() == 0.0);
  Vector c = Vector::Zero(4);
  c[3] = 1.0;
  const Vector h = op.apply(c);
  CHECK(h[0] == 1.0);
  CHECK(h[1] == -1.0);
  CHECK(h[2] == 0.0);
  CHECK((op.intercept_column() - h).norm() == 0.0);
}

TEST_CASE("weights scale rows by their square root") {
  const auto ds = parse("item_i,item_j,value,weight\na,b,3,4\n");
  const auto op = build_design(ds);
  CHECK(op.rows()[0].scale == 2.0);
  const Vector y = op.weighted(ds.values());
  CHECK(y[0] == 6.0);
}

TEST_CASE("connectivity") {
  SUBCASE("path") {
    const auto comps = connectivity(edges_dataset(3, {{0, 1}, {1, 2}}));
    REQUIRE(comps.size() == 1);
    CHECK(comps[0] == IndexSet{0, 1, 2});
  }
  SUBCASE("two components") {
    const auto ds = edges_dataset(4, {{0, 1}, {2, 3}});
    CHECK(connectivity(ds).size() == 2);
    try {
      require_connected(ds);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("{2, 3}") != std::string::npos);
    }
  }
  SUBCASE("no edges") {
    const auto comps = connected_components(3, {});
    CHECK(comps.size() == 3);
  }
}

TEST_CASE("estimate_operator_norm on known spectra") {
  CHECK(estimate_operator_norm(build_design(edges_dataset(3, {{0, 1}, {1, 2}, {2, 0}}))) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(estimate_operator_norm(build_design(edges_dataset(3, {{0, 1}, {1, 2}}))) == doctest::Approx(3.0).epsilon(1e-6));
  for (Index k = 1; k <= 6; ++k) {
    std::vector<std::pair<Index, Index>> star;
    for (Index leaf = 1; leaf <= k; ++leaf) star.emplace_back(0, leaf);
    const auto op = build_design(edges_dataset(k + 1, star));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(op.laplacian().to_dense());
    CHECK(eig.eigenvalues().maxCoeff() == doctest::Approx(double(k + 1)).epsilon(1e-12));
    CHECK(estimate_operator_norm(op) == doctest::Approx(double(k + 1)).epsilon(1e-6));
  }
}

TEST_CASE("without_rows matches a rebuilt design") {
  std::mt19937_64 rng(3);
  const auto edges = oracle::random_connected_edges(rng, 6, 12);
  const auto ds = edges_dataset(6, edges);
  const auto op = build_design(ds);
  const std::vector<Index> drop{1, 4, 7};
  const auto reduced = op.without_rows(drop);
  const auto rebuilt = build_design(ds.without(drop));
  CHECK(reduced.m() == rebuilt.m());
  CHECK((oracle::dense_design(reduced) - oracle::dense_design(rebuilt)).norm() == 0.0);
}
