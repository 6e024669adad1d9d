#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "robrank/comparison.hpp"
#include "robrank/lasso.hpp"
#include "robrank/lbi.hpp"
#include "robrank/types.hpp"

namespace robrank {

/// Generated comparison data together with its ground truth.
struct SyntheticInstance {
  ComparisonDataset dataset;
  Vector truth_theta;     // zero-sum scores; for flip data, centred positions of the planted order
  IndexSet truth_outliers;  // supp(truth_gamma), ascending
  Vector truth_gamma;     // dense, length m
  std::optional<double> truth_intercept;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;
};

/// Maximum number of graph redraws when a generator must produce a connected graph.
inline constexpr int kMaxConnectivityRedraws = 100;

/// Dichotomous data from a random total order: `sn` comparisons of uniformly
/// random distinct pairs, Y = +1 when the order prefers i, and floor(op * sn)
/// of them reversed (gamma* = -2 Y_clean).
SyntheticInstance gen_flip(Index n, Index sn, double op, std::uint64_t seed);

/// Y = X theta* + eps + gamma*, theta* ~ N(0, I) centred, eps ~ N(0, sigma^2),
/// gamma* = +-magnitude on floor(frac * m) uniformly chosen rows.
SyntheticInstance gen_gaussian(Index n, Index m, double sigma, double outlier_frac, double outlier_mag,
                               std::uint64_t seed);

/// Default truth image: a diagonal ramp plus a bright disc, values in [0, 1].
Vector default_truth_image(Index width, Index height);

/// One node per pixel (index y * width + x) and one comparison per unordered
/// pixel pair within Chebyshev distance `radius`:
///   Y = I(p) - I(q) + N(0, sigma^2) + gamma*.
SyntheticInstance gen_image(Index width, Index height, Index radius, double sigma, double outlier_frac,
                            double outlier_mag, std::optional<Vector> truth_image, std::uint64_t seed);

/// Number of comparisons gen_image produces, by closed form.
Index image_pair_count(Index width, Index height, Index radius);

/// Games between uniformly random distinct teams with a random host:
///   Y = theta_i - theta_j + c h + eps, theta* ~ N(0, strength_sd^2).
SyntheticInstance gen_sports(Index teams, Index games, double sigma, double home_advantage, std::uint64_t seed,
                             double strength_sd = 5.0);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr)
  double auc = 0.0;
};

/// ROC of `scores` (higher = more outlying) against `truth` (indices into scores).
RocCurve roc_auc(const Vector& scores, const IndexSet& truth);

/// Tau-b rank correlation.
double kendall_tau(const Vector& a, const Vector& b);

/// Mean squared error after removing the mean difference.
double aligned_mse(const Vector& estimate, const Vector& truth);

enum class GridMethod { lasso, lbi };
std::string_view to_string(GridMethod method);

struct GridConfig {
  GridMethod method = GridMethod::lasso;
  Index n = 16;
  std::vector<Index> sn_list{1000};
  std::vector<double> op_list{0.05};
  Index repeats = 20;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  LassoOptions lasso{};
  Index lasso_grid_points = 100;
  double lasso_floor_ratio = 1e-3;

  /// LBI settings; when neither stop rule is set the run is stopped at
  /// t = lbi_horizon_factor / ||P Y||_inf.
  LbiConfig lbi{};
  double lbi_horizon_factor = 200.0;
};

struct GridCell {
  Index sn = 0;
  double op = 0.0;
  double mean_auc = 0.0;
  double sd_auc = 0.0;  // sample standard deviation (0 for one repeat)
  Index repeats = 0;
  GridMethod method = GridMethod::lasso;
  std::vector<double> aucs;
};

/// Seed of repeat r in cell c: master ^ splitmix64(c << 32 | r).
std::uint64_t repeat_seed(std::uint64_t master, Index cell, Index repeat);

/// Detection AUC on one flip instance.
double instance_auc(const SyntheticInstance& instance, const GridConfig& config);

/// Cells in (sn, op) row-major order.
std::vector<GridCell> run_grid(const GridConfig& config);

}  // namespace robrank
