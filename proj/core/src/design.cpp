#include "robrank/design.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "robrank/error.hpp"

namespace robrank {

namespace {
inline Eigen::Index ei(Index k) { return static_cast<Eigen::Index>(k); }
}  // namespace

void SparseLaplacian::multiply(const Vector& x, Vector& out) const {
  out.resize(ei(n));
  for (Index r = 0; r < n; ++r) {
    double acc = 0.0;
    for (Index k = row_start[r]; k < row_start[r + 1]; ++k) acc += val[k] * x[ei(col[k])];
    out[ei(r)] = acc;
  }
}

Matrix SparseLaplacian::to_dense() const {
  Matrix dense = Matrix::Zero(ei(n), ei(n));
  for (Index r = 0; r < n; ++r)
    for (Index k = row_start[r]; k < row_start[r + 1]; ++k) dense(ei(r), ei(col[k])) += val[k];
  return dense;
}

Vector DesignOperator::apply(const Vector& v) const {
  if (static_cast<Index>(v.size()) != cols())
    throw UsageError("design_apply: expected " + std::to_string(cols()) + " entries, got " + std::to_string(v.size()));
  Vector out(ei(m()));
  const double c = has_intercept_ ? v[ei(n_)] : 0.0;
  for (Index r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    out[ei(r)] = row.scale * (v[ei(row.i)] - v[ei(row.j)]) + row.host * c;
  }
  return out;
}

Vector DesignOperator::adjoint(const Vector& y) const {
  if (static_cast<Index>(y.size()) != m())
    throw UsageError("design_apply: expected " + std::to_string(m()) + " entries, got " + std::to_string(y.size()));
  Vector out = Vector::Zero(ei(cols()));
  double c = 0.0;
  for (Index r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    const double s = row.scale * y[ei(r)];
    out[ei(row.i)] += s;
    out[ei(row.j)] -= s;
    c += row.host * y[ei(r)];
  }
  if (has_intercept_) out[ei(n_)] = c;
  return out;
}

Vector DesignOperator::divergence(const Vector& y) const {
  Vector full = adjoint(y);
  return full.head(ei(n_));
}

Vector DesignOperator::gradient(const Vector& theta) const {
  if (static_cast<Index>(theta.size()) != n_) throw UsageError("gradient: expected n entries");
  Vector out(ei(m()));
  for (Index r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    out[ei(r)] = row.scale * (theta[ei(row.i)] - theta[ei(row.j)]);
  }
  return out;
}

Vector DesignOperator::intercept_column() const {
  Vector h(ei(m()));
  for (Index r = 0; r < rows_.size(); ++r) h[ei(r)] = rows_[r].host;
  return h;
}

Vector DesignOperator::weighted(const Vector& raw) const {
  if (static_cast<Index>(raw.size()) != m()) throw UsageError("weighted: expected m entries");
  Vector out(raw.size());
  for (Index r = 0; r < rows_.size(); ++r) out[ei(r)] = rows_[r].scale * raw[ei(r)];
  return out;
}

Vector DesignOperator::laplacian_apply(const Vector& x) const {
  if (static_cast<Index>(x.size()) != n_) throw UsageError("laplacian_apply: expected n entries");
  Vector out;
  laplacian_.multiply(x, out);
  return out;
}

DesignOperator build_design(const ComparisonDataset& dataset, bool with_intercept) {
  if (dataset.m() == 0) throw DataError("cannot build a design from an empty dataset");
  if (with_intercept && !dataset.has_intercept_info())
    throw DataError("intercept requested but the dataset has no host column");

  DesignOperator op;
  op.n_ = dataset.n();
  op.has_intercept_ = with_intercept;
  op.rows_.reserve(dataset.m());
  for (const auto& c : dataset.comparisons()) {
    const double s = std::sqrt(c.weight);
    double h = 0.0;
    if (with_intercept) h = c.host == Host::i ? s : c.host == Host::j ? -s : 0.0;
    op.rows_.push_back({c.i, c.j, s, h});
  }

  op.assemble();
  return op;
}

DesignOperator DesignOperator::without_rows(std::span<const Index> drop) const {
  std::vector<bool> gone(rows_.size(), false);
  for (Index r : drop) gone.at(r) = true;
  DesignOperator op;
  op.n_ = n_;
  op.has_intercept_ = has_intercept_;
  for (Index r = 0; r < rows_.size(); ++r)
    if (!gone[r]) op.rows_.push_back(rows_[r]);
  if (op.rows_.empty()) throw DataError("no comparisons left after dropping rows");
  op.assemble();
  return op;
}

void DesignOperator::assemble() {
  // Merge parallel edges into a CSR Laplacian.
  const Index n = n_;
  std::vector<std::map<Index, double>> adj(n);
  Vector diag = Vector::Zero(ei(n));
  for (const auto& row : rows_) {
    const double w = row.scale * row.scale;
    diag[ei(row.i)] += w;
    diag[ei(row.j)] += w;
    adj[row.i][row.j] -= w;
    adj[row.j][row.i] -= w;
  }
  auto& lap = laplacian_;
  lap.n = n;
  lap.diagonal = diag;
  lap.row_start.assign(n + 1, 0);
  for (Index r = 0; r < n; ++r) {
    adj[r][r] = diag[ei(r)];
    lap.row_start[r + 1] = lap.row_start[r] + adj[r].size();
    for (const auto& [c, v] : adj[r]) {
      lap.col.push_back(c);
      lap.val.push_back(v);
    }
  }

  std::vector<Index> parent(n);
  for (Index v = 0; v < n; ++v) parent[v] = v;
  auto find = [&](Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  component_count_ = n;
  for (const auto& row : rows_) {
    const Index a = find(row.i), b = find(row.j);
    if (a != b) {
      parent[a] = b;
      --component_count_;
    }
  }
  if (n <= DesignOperator::kDenseFactorLimit && component_count_ == 1) {
    Matrix grounded = lap.to_dense();
    const double shift = diag.sum() / static_cast<double>(n * n);
    grounded.array() += shift;
    auto factor = std::make_shared<Eigen::LLT<Matrix>>(grounded);
    if (factor->info() == Eigen::Success) dense_factor_ = std::move(factor);
  }

  operator_norm_ = estimate_operator_norm(*this);
}

Vector design_apply(const DesignOperator& op, const Vector& v, bool adjoint) {
  return adjoint ? op.adjoint(v) : op.apply(v);
}

double estimate_operator_norm(const DesignOperator& op) {
  const auto dim = ei(op.cols());
  Vector v(dim);
  // Deterministic start with components along every eigenvector generically.
  for (Eigen::Index k = 0; k < dim; ++k) v[k] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(k) + 0.3);
  v.normalize();
  double rho = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Vector w = op.adjoint(op.apply(v));
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 2 && std::abs(next - rho) <= 1e-10 * std::abs(next)) return next;
    rho = next;
  }
  return rho;
}

}  // namespace robrank
