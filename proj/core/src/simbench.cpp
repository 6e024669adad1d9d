#include "robrank/simbench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "robrank/design.hpp"
#include "robrank/error.hpp"
#include "robrank/hodge.hpp"

namespace robrank {

namespace {

inline Eigen::Index ei(Index k) { return static_cast<Eigen::Index>(k); }

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::pair<Index, Index> random_pair(Rng& rng, Index n) {
  std::uniform_int_distribution<Index> first(0, n - 1), second(0, n - 2);
  const Index i = first(rng);
  Index j = second(rng);
  if (j >= i) ++j;
  return {i, j};
}

std::vector<std::pair<Index, Index>> connected_pairs(Rng& rng, Index n, Index m, const char* who) {
  for (int attempt = 0; attempt < kMaxConnectivityRedraws; ++attempt) {
    std::vector<std::pair<Index, Index>> pairs(m);
    for (auto& p : pairs) p = random_pair(rng, n);
    std::vector<Comparison> rows(m);
    for (Index r = 0; r < m; ++r) {
      rows[r].i = pairs[r].first;
      rows[r].j = pairs[r].second;
    }
    if (connected_components(n, rows).size() == 1) return pairs;
  }
  throw DataError(std::string(who) + ": no connected graph after " + std::to_string(kMaxConnectivityRedraws) +
                  " redraws (n = " + std::to_string(n) + ", m = " + std::to_string(m) + ")");
}

IndexSet sample_rows(Rng& rng, Index m, Index count) {
  std::vector<Index> all(m);
  std::iota(all.begin(), all.end(), Index{0});
  // Partial Fisher-Yates.
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, m - 1);
    std::swap(all[k], all[pick(rng)]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

Index fraction_count(double frac, Index total) {
  return static_cast<Index>(std::floor(frac * static_cast<double>(total) + 1e-9));
}

Vector centred(Vector v) {
  v.array() -= v.mean();
  return v;
}

void check_fraction(double f, const char* who) {
  if (!(f >= 0.0 && f <= 1.0)) throw UsageError(std::string(who) + ": fraction must lie in [0, 1]");
}

}  // namespace

std::uint64_t repeat_seed(std::uint64_t master, Index cell, Index repeat) {
  return master ^ splitmix64((static_cast<std::uint64_t>(cell) << 32) | static_cast<std::uint64_t>(repeat));
}

SyntheticInstance gen_flip(Index n, Index sn, double op, std::uint64_t seed) {
  if (n < 2) throw UsageError("gen_flip: need n >= 2");
  if (sn < 1) throw UsageError("gen_flip: need SN >= 1");
  check_fraction(op, "gen_flip");
  Rng rng(seed);

  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  Vector theta(ei(n));  // the item at position 0 is best
  for (Index pos = 0; pos < n; ++pos) theta[ei(order[pos])] = static_cast<double>(n - 1 - pos);

  const auto pairs = connected_pairs(rng, n, sn, "gen_flip");
  const IndexSet flipped = sample_rows(rng, sn, fraction_count(op, sn));

  std::vector<Comparison> rows(sn);
  Vector gamma = Vector::Zero(ei(sn));
  for (Index r = 0; r < sn; ++r) {
    rows[r].i = pairs[r].first;
    rows[r].j = pairs[r].second;
    rows[r].value = theta[ei(pairs[r].first)] > theta[ei(pairs[r].second)] ? 1.0 : -1.0;
  }
  for (Index r : flipped) {
    gamma[ei(r)] = -2.0 * rows[r].value;
    rows[r].value = -rows[r].value;
  }

  std::vector<std::string> labels(n);
  for (Index k = 0; k < n; ++k) labels[k] = std::to_string(k);
  SyntheticInstance out;
  out.dataset = ComparisonDataset(ItemTable(std::move(labels)), std::move(rows));
  out.truth_theta = centred(theta);
  out.truth_outliers = flipped;
  out.truth_gamma = gamma;
  out.seed = seed;
  out.params = {{"n", double(n)}, {"sn", double(sn)}, {"op", op}};
  return out;
}

SyntheticInstance gen_gaussian(Index n, Index m, double sigma, double outlier_frac, double outlier_mag,
                               std::uint64_t seed) {
  if (n < 2) throw UsageError("gen_gaussian: need n >= 2");
  if (m < 1) throw UsageError("gen_gaussian: need m >= 1");
  if (!(sigma >= 0.0)) throw UsageError("gen_gaussian: sigma must be nonnegative");
  check_fraction(outlier_frac, "gen_gaussian");
  Rng rng(seed);
  std::normal_distribution<double> normal;

  Vector theta(ei(n));
  for (Index k = 0; k < n; ++k) theta[ei(k)] = normal(rng);
  theta = centred(theta);

  const auto pairs = connected_pairs(rng, n, m, "gen_gaussian");
  const IndexSet outliers = sample_rows(rng, m, fraction_count(outlier_frac, m));
  Vector gamma = Vector::Zero(ei(m));
  std::bernoulli_distribution coin(0.5);
  for (Index r : outliers) gamma[ei(r)] = coin(rng) ? outlier_mag : -outlier_mag;

  std::vector<Comparison> rows(m);
  for (Index r = 0; r < m; ++r) {
    rows[r].i = pairs[r].first;
    rows[r].j = pairs[r].second;
    const double eps = sigma > 0.0 ? sigma * normal(rng) : 0.0;
    rows[r].value = theta[ei(rows[r].i)] - theta[ei(rows[r].j)] + eps + gamma[ei(r)];
  }

  std::vector<std::string> labels(n);
  for (Index k = 0; k < n; ++k) labels[k] = std::to_string(k);
  SyntheticInstance out;
  out.dataset = ComparisonDataset(ItemTable(std::move(labels)), std::move(rows));
  out.truth_theta = theta;
  out.truth_outliers = outliers;
  out.truth_gamma = gamma;
  out.seed = seed;
  out.params = {{"n", double(n)},          {"m", double(m)},
                {"sigma", sigma},          {"outlier_frac", outlier_frac},
                {"outlier_mag", outlier_mag}};
  return out;
}

Vector default_truth_image(Index width, Index height) {
  Vector img(ei(width * height));
  const double cx = 0.6 * static_cast<double>(width - 1), cy = 0.4 * static_cast<double>(height - 1);
  const double rad = 0.25 * static_cast<double>(std::min(width, height));
  for (Index y = 0; y < height; ++y)
    for (Index x = 0; x < width; ++x) {
      const double fx = width > 1 ? static_cast<double>(x) / static_cast<double>(width - 1) : 0.0;
      const double fy = height > 1 ? static_cast<double>(y) / static_cast<double>(height - 1) : 0.0;
      double v = 0.3 * (fx + fy);
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      if (dx * dx + dy * dy <= rad * rad) v += 0.4;
      img[ei(y * width + x)] = v;
    }
  return img;
}

Index image_pair_count(Index width, Index height, Index radius) {
  Index total = 0;
  const auto r = static_cast<long long>(radius);
  const auto w = static_cast<long long>(width), h = static_cast<long long>(height);
  for (long long dy = 0; dy <= r; ++dy)
    for (long long dx = -r; dx <= r; ++dx) {
      if (dy == 0 && dx <= 0) continue;
      const long long cols = w - std::abs(dx), rows = h - dy;
      if (cols > 0 && rows > 0) total += static_cast<Index>(cols * rows);
    }
  return total;
}

SyntheticInstance gen_image(Index width, Index height, Index radius, double sigma, double outlier_frac,
                            double outlier_mag, std::optional<Vector> truth_image, std::uint64_t seed) {
  if (width * height < 2) throw DataError("gen_image: image must have at least two pixels");
  if (radius < 1) throw UsageError("gen_image: radius must be >= 1");
  if (!(sigma >= 0.0)) throw UsageError("gen_image: sigma must be nonnegative");
  check_fraction(outlier_frac, "gen_image");
  const Index n = width * height;
  Vector img = truth_image ? std::move(*truth_image) : default_truth_image(width, height);
  if (static_cast<Index>(img.size()) != n) throw UsageError("gen_image: truth image has the wrong size");
  if ((img.array() < 0.0).any() || (img.array() > 1.0).any())
    throw UsageError("gen_image: truth intensities must lie in [0, 1]");

  std::vector<Comparison> rows;
  rows.reserve(image_pair_count(width, height, radius));
  const auto r = static_cast<long long>(radius);
  const auto w = static_cast<long long>(width), h = static_cast<long long>(height);
  for (long long y = 0; y < h; ++y)
    for (long long x = 0; x < w; ++x)
      for (long long dy = 0; dy <= r; ++dy)
        for (long long dx = -r; dx <= r; ++dx) {
          if (dy == 0 && dx <= 0) continue;
          const long long qx = x + dx, qy = y + dy;
          if (qx < 0 || qx >= w || qy >= h) continue;
          Comparison c;
          c.i = static_cast<Index>(y * w + x);
          c.j = static_cast<Index>(qy * w + qx);
          rows.push_back(std::move(c));
        }
  const Index m = rows.size();

  Rng rng(seed);
  std::normal_distribution<double> normal;
  const IndexSet outliers = sample_rows(rng, m, fraction_count(outlier_frac, m));
  Vector gamma = Vector::Zero(ei(m));
  std::bernoulli_distribution coin(0.5);
  for (Index k : outliers) gamma[ei(k)] = coin(rng) ? outlier_mag : -outlier_mag;
  for (Index k = 0; k < m; ++k) {
    const double eps = sigma > 0.0 ? sigma * normal(rng) : 0.0;
    rows[k].value = img[ei(rows[k].i)] - img[ei(rows[k].j)] + eps + gamma[ei(k)];
  }

  std::vector<std::string> labels(n);
  for (Index k = 0; k < n; ++k) labels[k] = std::to_string(k);
  SyntheticInstance out;
  out.dataset = ComparisonDataset(ItemTable(std::move(labels)), std::move(rows));
  out.truth_theta = img;
  out.truth_outliers = outliers;
  out.truth_gamma = gamma;
  out.seed = seed;
  out.params = {{"width", double(width)}, {"height", double(height)},         {"radius", double(radius)},
                {"sigma", sigma},         {"outlier_frac", outlier_frac}, {"outlier_mag", outlier_mag}};
  return out;
}

SyntheticInstance gen_sports(Index teams, Index games, double sigma, double home_advantage, std::uint64_t seed,
                             double strength_sd) {
  if (teams < 2) throw UsageError("gen_sports: need at least two teams");
  if (games < 1) throw UsageError("gen_sports: need at least one game");
  if (!(sigma >= 0.0)) throw UsageError("gen_sports: sigma must be nonnegative");
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Vector theta(ei(teams));
  for (Index k = 0; k < teams; ++k) theta[ei(k)] = strength_sd * normal(rng);
  theta = centred(theta);

  const auto pairs = connected_pairs(rng, teams, games, "gen_sports");
  std::bernoulli_distribution coin(0.5);
  std::vector<Comparison> rows(games);
  for (Index r = 0; r < games; ++r) {
    auto& c = rows[r];
    c.i = pairs[r].first;
    c.j = pairs[r].second;
    c.host = coin(rng) ? Host::i : Host::j;
    const double hsign = c.host == Host::i ? 1.0 : -1.0;
    const double eps = sigma > 0.0 ? sigma * normal(rng) : 0.0;
    c.value = theta[ei(c.i)] - theta[ei(c.j)] + home_advantage * hsign + eps;
  }

  std::vector<std::string> labels(teams);
  for (Index k = 0; k < teams; ++k) labels[k] = "team" + std::to_string(k);
  SyntheticInstance out;
  out.dataset = ComparisonDataset(ItemTable(std::move(labels)), std::move(rows), true);
  out.truth_theta = theta;
  out.truth_gamma = Vector::Zero(ei(games));
  out.truth_intercept = home_advantage;
  out.seed = seed;
  out.params = {{"teams", double(teams)},
                {"games", double(games)},
                {"sigma", sigma},
                {"home_advantage", home_advantage},
                {"strength_sd", strength_sd}};
  return out;
}

RocCurve roc_auc(const Vector& scores, const IndexSet& truth) {
  const Index m = static_cast<Index>(scores.size());
  std::vector<bool> positive(m, false);
  for (Index r : truth) {
    if (r >= m) throw UsageError("roc_auc: truth index out of range");
    positive[r] = true;
  }
  const Index pos = static_cast<Index>(std::count(positive.begin(), positive.end(), true));
  if (pos == 0 || pos == m) throw UsageError("roc_auc: truth must be a nonempty proper subset");
  const Index neg = m - pos;

  std::vector<Index> idx(m);
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return scores[ei(a)] > scores[ei(b)]; });

  RocCurve out;
  out.points.emplace_back(0.0, 0.0);
  Index tp = 0, fp = 0;
  double area = 0.0;
  for (Index k = 0; k < m;) {
    const double s = scores[ei(idx[k])];
    Index gtp = 0, gfp = 0;
    while (k < m && scores[ei(idx[k])] == s) {
      (positive[idx[k]] ? gtp : gfp) += 1;
      ++k;
    }
    const double x0 = double(fp) / double(neg), y0 = double(tp) / double(pos);
    tp += gtp;
    fp += gfp;
    const double x1 = double(fp) / double(neg), y1 = double(tp) / double(pos);
    area += (x1 - x0) * (y0 + y1) / 2.0;
    out.points.emplace_back(x1, y1);
  }
  out.auc = std::clamp(area, 0.0, 1.0);
  return out;
}

double kendall_tau(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw UsageError("kendall_tau: length mismatch");
  if (a.size() < 2) throw UsageError("kendall_tau: need at least two entries");
  long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (Eigen::Index p = 0; p < a.size(); ++p)
    for (Eigen::Index q = p + 1; q < a.size(); ++q) {
      const double da = a[p] - a[q], db = b[p] - b[q];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ++ties_a;
      } else if (db == 0.0) {
        ++ties_b;
      } else if ((da > 0) == (db > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  const double n1 = double(concordant + discordant + ties_a), n2 = double(concordant + discordant + ties_b);
  if (n1 == 0.0 || n2 == 0.0) return 0.0;
  return double(concordant - discordant) / std::sqrt(n1 * n2);
}

double aligned_mse(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) throw UsageError("aligned_mse: length mismatch");
  if (estimate.size() == 0) return 0.0;
  const Vector diff = estimate - truth;
  return (diff.array() - diff.mean()).square().mean();
}

std::string_view to_string(GridMethod method) { return method == GridMethod::lasso ? "lasso" : "lbi"; }

double instance_auc(const SyntheticInstance& instance, const GridConfig& config) {
  const DesignOperator op = build_design(instance.dataset);
  const CyclicProjection proj(op);
  const Vector y = response(op, instance.dataset);
  if (config.method == GridMethod::lasso) {
    const double lmax = lambda_max(proj, y);
    const auto path =
        lasso_path(proj, y, default_lambda_grid(lmax, config.lasso_grid_points, config.lasso_floor_ratio), config.lasso);
    return roc_auc(detection_scores(path), instance.truth_outliers).auc;
  }
  LbiConfig cfg = config.lbi;
  cfg.refit = FinalRefit::none;
  if (!cfg.time_horizon && !cfg.support_budget) {
    const double lmax = lambda_max(proj, y);
    if (lmax > 0.0) cfg.time_horizon = config.lbi_horizon_factor / lmax;
  }
  const auto run = lbi_run(proj, y, cfg);
  return roc_auc(detection_scores(run.path), instance.truth_outliers).auc;
}

std::vector<GridCell> run_grid(const GridConfig& config) {
  if (config.repeats < 1) throw UsageError("run_grid: repeats must be >= 1");
  if (config.sn_list.empty() || config.op_list.empty()) throw UsageError("run_grid: empty SN or OP list");

  struct Task {
    Index cell, repeat, sn;
    double op;
  };
  std::vector<Task> tasks;
  std::vector<GridCell> cells;
  for (Index sn : config.sn_list)
    for (double op : config.op_list) {
      const Index c = cells.size();
      GridCell cell;
      cell.sn = sn;
      cell.op = op;
      cell.repeats = config.repeats;
      cell.method = config.method;
      cell.aucs.assign(config.repeats, 0.0);
      cells.push_back(std::move(cell));
      for (Index r = 0; r < config.repeats; ++r) tasks.push_back({c, r, sn, op});
    }

  auto run_task = [&](const Task& t) {
    const auto inst = gen_flip(config.n, t.sn, t.op, repeat_seed(config.seed, t.cell, t.repeat));
    cells[t.cell].aucs[t.repeat] = instance_auc(inst, config);
  };

  const unsigned threads = std::max(1u, config.threads);
  if (threads == 1) {
    for (const auto& t : tasks) run_task(t);
  } else {
    // Each task writes its own slot; the first error is rethrown after joining.
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (Index k = w; k < tasks.size(); k += threads) run_task(tasks[k]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (auto& cell : cells) {
    const double reps = static_cast<double>(cell.aucs.size());
    double mean = 0.0;
    for (double a : cell.aucs) mean += a;
    mean /= reps;
    double var = 0.0;
    for (double a : cell.aucs) var += (a - mean) * (a - mean);
    cell.mean_auc = mean;
    cell.sd_auc = cell.aucs.size() > 1 ? std::sqrt(var / (reps - 1.0)) : 0.0;
  }
  return cells;
}

}  // namespace robrank
