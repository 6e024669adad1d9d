#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "robrank/comparison.hpp"
#include "robrank/design.hpp"
#include "robrank/diagnostics.hpp"
#include "robrank/error.hpp"
#include "robrank/format.hpp"
#include "robrank/hodge.hpp"
#include "robrank/io.hpp"
#include "robrank/lasso.hpp"
#include "robrank/lbi.hpp"
#include "robrank/report.hpp"
#include "robrank/simbench.hpp"

namespace robrank::cli {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string input;
  std::string out_dir = ".";
  bool quiet = false;
  bool timing = false;
  bool intercept = false;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  Index max_iters = 0;  // 0 keeps the solver default
  std::string delimiter = ",";
};

struct LambdaFlags {
  double lambda = 0.0;
  double top_frac = 0.0;
  bool cv = false;
  Index folds = 5;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* top_frac_opt = nullptr;
};

struct LbiFlags {
  double kappa = 50.0;
  double dt = 0.0;
  std::string preset;
  std::string variant = "projected";
  std::string refit = "drop";
  CLI::Option* kappa_opt = nullptr;
  CLI::Option* dt_opt = nullptr;
  CLI::Option* preset_opt = nullptr;
};

class Timer {
 public:
  explicit Timer(bool enabled) : enabled_(enabled) {}
  template <typename F>
  auto phase(const std::string& name, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
      if (enabled_)
        laps_.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto v = f();
      finish();
      return v;
    }
  }
  [[nodiscard]] const std::vector<std::pair<std::string, double>>& laps() const { return laps_; }

 private:
  bool enabled_;
  std::vector<std::pair<std::string, double>> laps_;
};

void add_common(CLI::App* app, Common& c, bool needs_input) {
  if (needs_input) app->add_option("input", c.input, "Comparison CSV (item_i,item_j,value[,rater][,weight][,host])")->required();
  app->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
  app->add_flag("--quiet", c.quiet, "Suppress the stdout summary");
  app->add_flag("--timing", c.timing, "Record wall-clock time per phase in the report");
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

void add_solver_flags(CLI::App* app, Common& c) {
  app->add_flag("--intercept", c.intercept, "Fit a home-advantage intercept from the host column");
  app->add_option("--tol", c.tol, "LASSO optimality tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--max-iters", c.max_iters, "Iteration cap for LASSO and LBI (0 = solver default)");
  app->add_option("--delimiter", c.delimiter, "Input field delimiter")->capture_default_str();
}

void add_lambda_flags(CLI::App* app, LambdaFlags& f) {
  f.lambda_opt = app->add_option("--lambda", f.lambda, "Regularization parameter (LBI: stop at t = 1/lambda)")
                     ->check(CLI::PositiveNumber);
  f.top_frac_opt =
      app->add_option("--top-frac", f.top_frac, "Flag the top p fraction of comparisons along the path (0 < p <= 1)")
          ->check(CLI::Range(0.0, 1.0));
  app->add_flag("--cv", f.cv, "Choose lambda by random-projection cross-validation");
  app->add_option("--folds", f.folds, "Cross-validation folds")->capture_default_str();
}

void add_lbi_flags(CLI::App* app, LbiFlags& f) {
  f.kappa_opt = app->add_option("--kappa", f.kappa, "LBI damping kappa")->capture_default_str()->check(CLI::PositiveNumber);
  f.dt_opt = app->add_option("--dt", f.dt, "LBI step size (default: largest safe step)")->check(CLI::PositiveNumber);
  f.preset_opt = app->add_option("--preset", f.preset, "LBI (kappa, dt) preset")
                     ->check(CLI::IsMember({"pcvqa", "nba", "tennis"}));
  app->add_option("--variant", f.variant, "LBI dynamics")
      ->capture_default_str()
      ->check(CLI::IsMember({"projected", "full"}));
  app->add_option("--refit", f.refit, "Final LBI scores (projected variant)")
      ->capture_default_str()
      ->check(CLI::IsMember({"drop", "hlasso"}));
}

char delimiter_of(const Common& c) {
  if (c.delimiter == "\\t" || c.delimiter == "tab") return '\t';
  if (c.delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
  return c.delimiter[0];
}

ComparisonDataset load_input(const Common& c) {
  CsvSchema schema;
  schema.delimiter = delimiter_of(c);
  return load_csv_file(c.input, schema);
}

fs::path prepare_out(const Common& c) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write '" + p.string() + "'");
  f << text;
}

template <typename Writer>
void write_file_with(const fs::path& p, Writer&& w) {
  std::ostringstream s;
  w(s);
  write_file(p, s.str());
}

LassoOptions lasso_options(const Common& c) {
  LassoOptions o;
  o.tol = c.tol;
  if (c.max_iters) o.max_iter = c.max_iters;
  return o;
}

LbiConfig lbi_config(const LbiFlags& f, const Common& c) {
  LbiConfig cfg;
  if (f.preset_opt->count()) {
    if (f.kappa_opt->count() || f.dt_opt->count()) throw UsageError("--preset conflicts with --kappa/--dt");
    cfg = preset_config(*parse_preset(f.preset));
  } else {
    cfg.kappa = f.kappa;
    cfg.delta_t = f.dt_opt->count() ? f.dt : 0.0;
  }
  cfg.variant = f.variant == "full" ? LbiVariant::full : LbiVariant::projected;
  cfg.refit = f.refit == "hlasso" ? FinalRefit::hlasso : FinalRefit::drop;
  if (c.max_iters) cfg.max_iters = c.max_iters;
  return cfg;
}

enum class LambdaSource { explicit_value, top_fraction, cross_validation, dichotomous, concomitant };

std::string_view to_string(LambdaSource s) {
  switch (s) {
    case LambdaSource::explicit_value: return "explicit";
    case LambdaSource::top_fraction: return "top_frac";
    case LambdaSource::cross_validation: return "cv";
    case LambdaSource::dichotomous: return "dichotomous";
    case LambdaSource::concomitant: return "concomitant";
  }
  return "?";
}

// --lambda > --top-frac > --cv > lambda = 1 for +-1 data > concomitant scale.
LambdaSource lambda_source(const LambdaFlags& f, const ComparisonDataset& ds) {
  if (f.lambda_opt->count()) return LambdaSource::explicit_value;
  if (f.top_frac_opt->count()) return LambdaSource::top_fraction;
  if (f.cv) return LambdaSource::cross_validation;
  if (ds.is_dichotomous()) return LambdaSource::dichotomous;
  return LambdaSource::concomitant;
}

bool any_lambda_flag(const LambdaFlags& f) { return f.lambda_opt->count() || f.top_frac_opt->count() || f.cv; }

// Outcome shared by rank and detect.
struct Analysis {
  RankingResult ranking;
  Vector gamma;
  IndexSet support;
  std::vector<Index> entry_rank;  // per comparison, 1-based; empty if no path
  std::vector<std::pair<std::string, ReportValue>> params;
};

std::vector<Index> ranks_from_path(const RegularizationPath& path) {
  const IndexSet order = detection_order(path);
  std::vector<Index> rank(order.size());
  for (Index pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos + 1;
  return rank;
}

void add_param(Analysis& a, std::string key, ReportValue v) { a.params.emplace_back(std::move(key), std::move(v)); }

Analysis analyze_lasso(const CyclicProjection& proj, const Vector& y, const ComparisonDataset& ds, const LambdaFlags& f,
                       const Common& c, bool debias, Timer& timer) {
  Analysis a;
  const auto& op = proj.design();
  const LassoOptions opts = lasso_options(c);
  const LambdaSource src = lambda_source(f, ds);
  add_param(a, "solver", std::string("lasso"));
  add_param(a, "lambda_source", std::string(to_string(src)));
  OutlierEstimate est;
  switch (src) {
    case LambdaSource::explicit_value:
    case LambdaSource::dichotomous: {
      const double lambda = src == LambdaSource::dichotomous ? 1.0 : f.lambda;
      est = timer.phase("lasso", [&] { return solve_lasso(proj, y, lambda, opts); });
      break;
    }
    case LambdaSource::cross_validation: {
      const auto cv = timer.phase("cv", [&] { return cv_lambda(proj, y, f.folds, std::nullopt, c.seed); });
      add_param(a, "cv_folds", static_cast<long long>(f.folds));
      add_param(a, "cv_lambda_1se", cv.lambda_1se);
      est = timer.phase("lasso", [&] { return solve_lasso(proj, y, cv.lambda, opts); });
      break;
    }
    case LambdaSource::top_fraction: {
      const auto path = timer.phase("path", [&] { return lasso_path(proj, y, std::nullopt, opts); });
      a.support = top_fraction(path, f.top_frac);
      std::sort(a.support.begin(), a.support.end());
      const auto& point = first_point_with_support(path, a.support.size());
      est.lambda = point.param;
      est.gamma = to_dense(point.gamma, op.m());
      est.objective = lasso_objective(proj, y, est.lambda, est.gamma);
      est.kkt_violation = kkt_violation(proj, y, est.lambda, est.gamma);
      a.entry_rank = ranks_from_path(path);
      add_param(a, "top_frac", f.top_frac);
      break;
    }
    case LambdaSource::concomitant: {
      ScaleOptions so;
      so.lasso = opts;
      const auto sc = timer.phase("concomitant", [&] { return concomitant_scale(proj, y, so); });
      add_param(a, "sigma", sc.sigma);
      add_param(a, "huber_M", so.M);
      add_param(a, "alternations", static_cast<long long>(sc.alternations));
      est = sc.outliers;
      break;
    }
  }
  if (src != LambdaSource::top_fraction) a.support = est.support;
  add_param(a, "lambda", est.lambda);
  add_param(a, "objective", est.objective);
  add_param(a, "kkt_violation", est.kkt_violation);
  add_param(a, "lasso_converged", est.converged);
  a.gamma = est.gamma;
  a.ranking = timer.phase("refit", [&] {
    return debias ? refit_drop(op, y, a.support, proj.options()) : refit_hlasso(proj, y, est.gamma);
  });
  return a;
}

Analysis analyze_lbi(const CyclicProjection& proj, const Vector& y, const ComparisonDataset& ds, const LambdaFlags& f,
                     const LbiFlags& lf, const Common& c, Timer& timer) {
  Analysis a;
  const auto& op = proj.design();
  LbiConfig cfg = lbi_config(lf, c);
  const LambdaSource src = lambda_source(f, ds);
  add_param(a, "solver", std::string("lbi"));
  add_param(a, "lambda_source", std::string(to_string(src)));
  switch (src) {
    case LambdaSource::explicit_value: cfg.time_horizon = 1.0 / f.lambda; break;
    case LambdaSource::dichotomous: cfg.time_horizon = 1.0; break;
    case LambdaSource::top_fraction:
      cfg.support_budget = static_cast<Index>(std::ceil(f.top_frac * static_cast<double>(op.m())));
      add_param(a, "top_frac", f.top_frac);
      break;
    case LambdaSource::cross_validation: {
      const auto cv = timer.phase("cv", [&] { return cv_lambda(proj, y, f.folds, std::nullopt, c.seed); });
      add_param(a, "cv_folds", static_cast<long long>(f.folds));
      cfg.time_horizon = 1.0 / cv.lambda;
      break;
    }
    case LambdaSource::concomitant: {
      ScaleOptions so;
      so.lasso = lasso_options(c);
      const auto sc = timer.phase("concomitant", [&] { return concomitant_scale(proj, y, so); });
      add_param(a, "sigma", sc.sigma);
      cfg.time_horizon = 1.0 / sc.lambda;
      break;
    }
  }
  const auto run = timer.phase("lbi", [&] { return lbi_run(proj, y, cfg); });
  add_param(a, "variant", std::string(run.config.variant == LbiVariant::full ? "full" : "projected"));
  add_param(a, "kappa", run.config.kappa);
  add_param(a, "dt", run.config.delta_t);
  add_param(a, "h", run.config.h());
  if (cfg.time_horizon) add_param(a, "time_horizon", *cfg.time_horizon);
  if (cfg.support_budget) add_param(a, "support_budget", static_cast<long long>(*cfg.support_budget));
  add_param(a, "stop_reason", std::string(to_string(run.stop_reason)));
  add_param(a, "hit_iteration_cap", run.hit_iteration_cap);
  add_param(a, "t_final", static_cast<double>(run.state.k) * run.config.delta_t);
  add_param(a, "lambda", run.outliers.lambda);
  if (run.config.variant == LbiVariant::projected)
    add_param(a, "refit", std::string(run.config.refit == FinalRefit::drop ? "drop" : "hlasso"));
  a.gamma = run.outliers.gamma;
  a.support = run.outliers.support;
  a.entry_rank = ranks_from_path(run.path);
  a.ranking = run.ranking;
  return a;
}

std::vector<OutlierRow> outlier_rows(const ComparisonDataset& ds, const Analysis& a) {
  std::vector<Index> rows = a.support;
  std::vector<Index> rank(ds.m(), 0);
  if (!a.entry_rank.empty()) {
    rank = a.entry_rank;
  } else {
    std::vector<Index> order(ds.m());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) {
      return std::abs(a.gamma[static_cast<Eigen::Index>(p)]) > std::abs(a.gamma[static_cast<Eigen::Index>(q)]);
    });
    for (Index pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos + 1;
  }
  std::sort(rows.begin(), rows.end(), [&](Index p, Index q) { return rank[p] < rank[q]; });
  std::vector<OutlierRow> out;
  for (Index r : rows) {
    const auto& cmp = ds[r];
    out.push_back({r, ds.items().label(cmp.i), ds.items().label(cmp.j), cmp.rater, cmp.value,
                   a.gamma[static_cast<Eigen::Index>(r)], rank[r]});
  }
  return out;
}

Method method_of(const std::string& name) {
  if (name == "l2") return Method::l2;
  if (name == "hlasso") return Method::hlasso;
  if (name == "lbi") return Method::lbi;
  return Method::lasso_l2;
}

struct RankingCommand {
  Common common;
  LambdaFlags lambda;
  LbiFlags lbi;
  std::string method = "l2";
  std::string solver = "lasso";
};

int cmd_rank(RankingCommand& cmd, bool detect, std::ostream& out) {
  const Common& c = cmd.common;
  Timer timer(c.timing);
  const auto ds = timer.phase("load", [&] { return load_input(c); });
  require_connected(ds);
  const auto op = timer.phase("design", [&] { return build_design(ds, c.intercept); });
  const CyclicProjection proj(op);
  const Vector y = response(op, ds);

  const Method method = detect ? (cmd.solver == "lbi" ? Method::lbi : Method::lasso_l2) : method_of(cmd.method);
  if (method == Method::l2 && any_lambda_flag(cmd.lambda))
    throw UsageError("--lambda/--top-frac/--cv have no effect with --method l2");

  Analysis a;
  if (method == Method::l2) {
    a.ranking = timer.phase("l2", [&] { return solve_l2(proj, y); });
    a.gamma = Vector::Zero(static_cast<Eigen::Index>(op.m()));
  } else if (method == Method::lbi) {
    a = analyze_lbi(proj, y, ds, cmd.lambda, cmd.lbi, c, timer);
  } else {
    a = analyze_lasso(proj, y, ds, cmd.lambda, c, method == Method::lasso_l2, timer);
  }

  RunReport rep;
  rep.command = detect ? "detect" : "rank";
  rep.method = std::string(to_string(method));
  rep.parameters.emplace_back("n", static_cast<long long>(ds.n()));
  rep.parameters.emplace_back("m", static_cast<long long>(ds.m()));
  rep.parameters.emplace_back("intercept_requested", c.intercept);
  for (auto& p : a.params) rep.parameters.push_back(std::move(p));
  rep.ranking = ranking_rows(ds.items(), a.ranking.theta);
  rep.intercept = a.ranking.intercept;
  rep.residual_l2 = a.ranking.residual_l2;
  rep.iterations = static_cast<long long>(a.ranking.solver_iterations);
  if (method != Method::l2) rep.outliers = outlier_rows(ds, a);
  rep.timing = timer.laps();

  const auto dir = prepare_out(c);
  if (detect) {
    write_file(dir / "outliers.json", emit_report(rep, ReportFormat::json));
    write_file(dir / "outliers.csv", emit_report(rep, ReportFormat::csv));
  } else {
    write_file_with(dir / "ranking.csv", [&](std::ostream& s) { write_ranking_csv(s, ds.items(), a.ranking.theta); });
    write_file(dir / "report.json", emit_report(rep, ReportFormat::json));
  }
  if (!c.quiet) {
    out << rep.command << ": method " << rep.method << ", n = " << ds.n() << ", m = " << ds.m()
        << ", outliers flagged = " << rep.outliers.size() << '\n';
    if (rep.intercept) out << "intercept " << format_real(*rep.intercept) << '\n';
    const Index show = std::min<Index>(rep.ranking.size(), 10);
    for (Index k = 0; k < show; ++k)
      out << "  " << rep.ranking[k].position << ". " << rep.ranking[k].label << "  " << format_real(rep.ranking[k].score)
          << '\n';
    out << "wrote " << (dir / (detect ? "outliers.json" : "report.json")).string() << '\n';
  }
  return kSuccess;
}

int cmd_path(RankingCommand& cmd, std::ostream& out) {
  const Common& c = cmd.common;
  const auto ds = load_input(c);
  require_connected(ds);
  const auto op = build_design(ds, c.intercept);
  const CyclicProjection proj(op);
  const Vector y = response(op, ds);
  RegularizationPath path;
  if (cmd.solver == "lasso") {
    if (any_lambda_flag(cmd.lambda)) throw UsageError("path --solver lasso takes no lambda-selection flags");
    path = lasso_path(proj, y, std::nullopt, lasso_options(c));
  } else {
    LbiConfig cfg = lbi_config(cmd.lbi, c);
    if (cmd.lambda.cv) throw UsageError("path --solver lbi does not support --cv");
    if (cmd.lambda.lambda_opt->count()) cfg.time_horizon = 1.0 / cmd.lambda.lambda;
    if (cmd.lambda.top_frac_opt->count())
      cfg.support_budget = static_cast<Index>(std::ceil(cmd.lambda.top_frac * static_cast<double>(op.m())));
    if (!cfg.time_horizon && !cfg.support_budget) {
      const double lmax = lambda_max(proj, y);
      if (lmax > 0.0) cfg.time_horizon = 1e3 / lmax;
    }
    path = lbi_run(proj, y, cfg).path;
  }
  const auto dir = prepare_out(c);
  write_file_with(dir / "path.csv", [&](std::ostream& s) { write_path_csv(s, path); });
  write_file_with(dir / "entry_order.csv", [&](std::ostream& s) { write_entry_order_csv(s, path); });
  if (!c.quiet)
    out << "path: solver " << cmd.solver << ", " << path.points.size() << " points, " << path.entered().size()
        << " of " << path.m << " comparisons entered\nwrote " << (dir / "path.csv").string() << '\n';
  return kSuccess;
}

struct SimulateCommand {
  Common common;
  std::string generator = "flip";
  Index n = 16;
  Index m = 1000;
  double op = 0.05;
  double sigma = 1.0;
  double magnitude = 10.0;
  double home = 3.0;
};

int cmd_simulate(SimulateCommand& cmd, std::ostream& out) {
  const Common& c = cmd.common;
  SyntheticInstance inst;
  if (cmd.generator == "flip") {
    inst = gen_flip(cmd.n, cmd.m, cmd.op, c.seed);
  } else if (cmd.generator == "gaussian") {
    inst = gen_gaussian(cmd.n, cmd.m, cmd.sigma, cmd.op, cmd.magnitude, c.seed);
  } else {
    inst = gen_sports(cmd.n, cmd.m, cmd.sigma, cmd.home, c.seed);
  }
  const auto dir = prepare_out(c);
  write_file_with(dir / "comparisons.csv", [&](std::ostream& s) { write_csv(s, inst.dataset); });
  write_file_with(dir / "truth.csv", [&](std::ostream& s) { write_truth_csv(s, inst); });
  write_file_with(dir / "truth_scores.csv", [&](std::ostream& s) { write_truth_scores_csv(s, inst); });
  if (!c.quiet)
    out << "simulate: " << cmd.generator << ", n = " << inst.dataset.n() << ", m = " << inst.dataset.m()
        << ", planted outliers = " << inst.truth_outliers.size() << "\nwrote " << (dir / "comparisons.csv").string()
        << '\n';
  return kSuccess;
}

struct GridCommand {
  Common common;
  std::string method = "lasso";
  Index n = 16;
  std::vector<Index> sn{1000};
  std::vector<double> op{0.05};
  Index repeats = 20;
  unsigned threads = 1;
  LbiFlags lbi;
};

int cmd_grid(GridCommand& cmd, std::ostream& out) {
  const Common& c = cmd.common;
  GridConfig cfg;
  cfg.method = cmd.method == "lbi" ? GridMethod::lbi : GridMethod::lasso;
  cfg.n = cmd.n;
  cfg.sn_list = cmd.sn;
  cfg.op_list = cmd.op;
  cfg.repeats = cmd.repeats;
  cfg.seed = c.seed;
  cfg.threads = cmd.threads;
  cfg.lasso = lasso_options(c);
  cfg.lbi = lbi_config(cmd.lbi, c);
  if (!c.max_iters) cfg.lbi.max_iters = 1000000;
  const auto cells = run_grid(cfg);
  const auto dir = prepare_out(c);
  write_file_with(dir / "grid.csv", [&](std::ostream& s) { write_grid_csv(s, cells); });
  if (!c.quiet) {
    out << "grid: method " << cmd.method << ", n = " << cmd.n << ", repeats = " << cmd.repeats << '\n';
    for (const auto& cell : cells)
      out << "  SN = " << cell.sn << ", OP = " << format_real(cell.op) << ": AUC " << format_real(cell.mean_auc)
          << " (sd " << format_real(cell.sd_auc) << ")\n";
    out << "wrote " << (dir / "grid.csv").string() << '\n';
  }
  return kSuccess;
}

struct ImageCommand {
  Common common;
  Index width = 50;
  Index height = 50;
  Index radius = 2;
  double sigma = 0.05;
  double frac = 0.1;
  double magnitude = 0.5;
  double top_frac = 0.0;
  CLI::Option* top_frac_opt = nullptr;
  LbiFlags lbi;
};

int cmd_image(ImageCommand& cmd, std::ostream& out) {
  const Common& c = cmd.common;
  Timer timer(c.timing);
  const auto inst = timer.phase("generate", [&] {
    return gen_image(cmd.width, cmd.height, cmd.radius, cmd.sigma, cmd.frac, cmd.magnitude, std::nullopt, c.seed);
  });
  const auto op = timer.phase("design", [&] { return build_design(inst.dataset); });
  const CyclicProjection proj(op);
  const Vector y = response(op, inst.dataset);
  const auto l2 = timer.phase("l2", [&] { return solve_l2(proj, y); });
  LbiConfig cfg = lbi_config(cmd.lbi, c);
  const double p = cmd.top_frac_opt->count() ? cmd.top_frac : cmd.frac;
  if (!(p > 0.0)) throw UsageError("image-sim: support budget fraction must be positive");
  cfg.support_budget = static_cast<Index>(std::ceil(p * static_cast<double>(op.m())));
  const auto run = timer.phase("lbi", [&] { return lbi_run(proj, y, cfg); });
  const double mse_l2 = aligned_mse(l2.theta, inst.truth_theta);
  const double mse_lbi = aligned_mse(run.ranking.theta, inst.truth_theta);
  const auto detect = roc_auc(detection_scores(run.path), inst.truth_outliers);

  RunReport rep;
  rep.command = "image-sim";
  rep.method = std::string(to_string(Method::lbi));
  rep.parameters = {{"width", static_cast<long long>(cmd.width)},
                    {"height", static_cast<long long>(cmd.height)},
                    {"radius", static_cast<long long>(cmd.radius)},
                    {"n", static_cast<long long>(op.n())},
                    {"m", static_cast<long long>(op.m())},
                    {"sigma", cmd.sigma},
                    {"outlier_frac", cmd.frac},
                    {"outlier_mag", cmd.magnitude},
                    {"kappa", run.config.kappa},
                    {"dt", run.config.delta_t},
                    {"support_budget", static_cast<long long>(*cfg.support_budget)},
                    {"stop_reason", std::string(to_string(run.stop_reason))},
                    {"mse_l2", mse_l2},
                    {"mse_lbi", mse_lbi},
                    {"detection_auc", detect.auc}};
  rep.residual_l2 = run.ranking.residual_l2;
  rep.iterations = static_cast<long long>(run.state.k);
  rep.timing = timer.laps();
  const auto dir = prepare_out(c);
  write_file(dir / "report.json", emit_report(rep));
  write_file_with(dir / "image.csv", [&](std::ostream& s) {
    s << "pixel,x,y,truth,l2,lbi\n";
    for (Index k = 0; k < op.n(); ++k) {
      const auto e = static_cast<Eigen::Index>(k);
      s << k << ',' << k % cmd.width << ',' << k / cmd.width << ',' << format_real(inst.truth_theta[e]) << ','
        << format_real(l2.theta[e]) << ',' << format_real(run.ranking.theta[e]) << '\n';
    }
  });
  if (!c.quiet)
    out << "image-sim: " << cmd.width << "x" << cmd.height << ", m = " << op.m() << "\n  aligned MSE L2  "
        << format_real(mse_l2) << "\n  aligned MSE LBI " << format_real(mse_lbi) << "\n  detection AUC "
        << format_real(detect.auc) << '\n';
  return kSuccess;
}

struct CheckCommand {
  Common common;
  std::string support;
  std::string truth;
  double sigma = 0.0;
  CLI::Option* sigma_opt = nullptr;
  CLI::Option* kappa_opt = nullptr;
  CLI::Option* dt_opt = nullptr;
  double kappa = 0.0;
  double dt = 0.0;
};

int cmd_check(CheckCommand& cmd, std::ostream& out) {
  const Common& c = cmd.common;
  const auto ds = load_input(c);
  require_connected(ds);
  const auto op = build_design(ds, c.intercept);
  const CyclicProjection proj(op);
  const Vector y = response(op, ds);
  ConsistencyInputs in;
  in.support = load_support_file(cmd.support);
  for (Index r : in.support)
    if (r >= op.m()) throw DataError("support index " + std::to_string(r) + " out of range (m = " + std::to_string(op.m()) + ")");

  // Plug-ins from the least-squares fit with the support deleted.
  std::optional<RankingResult> drop;
  auto drop_fit = [&]() -> const RankingResult& {
    if (!drop) drop = refit_drop(op, y, in.support, proj.options());
    return *drop;
  };
  if (cmd.sigma_opt->count()) {
    in.sigma = cmd.sigma;
  } else {
    const double rest = static_cast<double>(proj.cyclic_dimension()) - static_cast<double>(in.support.size());
    in.sigma = drop_fit().residual_l2 / std::sqrt(std::max(1.0, rest));
    if (!(in.sigma > 0.0)) throw DataError("check: residual scale is zero, pass --sigma");
  }
  if (!cmd.truth.empty()) {
    in.gamma_star = load_truth_gamma_file(cmd.truth, op.m());
  } else {
    Vector g = Vector::Zero(static_cast<Eigen::Index>(op.m()));
    Vector full(static_cast<Eigen::Index>(op.cols()));
    full.head(static_cast<Eigen::Index>(op.n())) = drop_fit().theta;
    if (op.has_intercept()) full[static_cast<Eigen::Index>(op.n())] = drop_fit().intercept.value_or(0.0);
    const Vector fitted = op.apply(full);
    for (Index r : in.support) g[static_cast<Eigen::Index>(r)] = y[static_cast<Eigen::Index>(r)] - fitted[static_cast<Eigen::Index>(r)];
    in.gamma_star = g;
  }
  if (cmd.kappa_opt->count()) in.kappa = cmd.kappa;
  if (cmd.dt_opt->count()) {
    if (!in.kappa) throw UsageError("--dt requires --kappa");
    in.step_h = *in.kappa * cmd.dt;
  }
  auto rep = consistency_report(proj, in);
  if (!cmd.sigma_opt->count()) rep.plugins[0] = "sigma:drop_refit_residual";
  if (cmd.truth.empty())
    for (auto& p : rep.plugins)
      if (p.rfind("gamma", 0) == 0 || p == "psi_gamma_norm") p += ":drop_refit_residual";
  const auto dir = prepare_out(c);
  write_file(dir / "consistency.json", consistency_report_json(rep));
  if (!c.quiet)
    out << "check: |S| = " << rep.support.size() << ", C1 " << (rep.c1_holds() ? "holds" : "fails") << ", C2 "
        << (rep.c2_holds() ? "holds" : "fails") << ", C3 " << (rep.c3_holds() ? "holds" : "fails") << "\nwrote "
        << (dir / "consistency.json").string() << '\n';
  return kSuccess;
}

int cmd_tsr(Common& c, std::ostream& out) {
  const auto ds = load_input(c);
  const double value = tsr(ds);
  RunReport rep;
  rep.command = "tsr";
  rep.method = "TSR";
  rep.parameters = {{"n", static_cast<long long>(ds.n())}, {"m", static_cast<long long>(ds.m())}, {"tsr", value}};
  const auto dir = prepare_out(c);
  write_file(dir / "tsr.json", emit_report(rep));
  if (!c.quiet) out << "tsr = " << format_real(value) << '\n';
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust ranking from pairwise comparisons with outlier detection", "robrank"};
  app.require_subcommand(1);
  app.footer(
      "Lambda selection precedence: --lambda > --top-frac > --cv > lambda = 1 for +-1 data > concomitant scale.\n"
      "Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.");

  RankingCommand rank, detect, path;
  auto* rank_cmd = app.add_subcommand("rank", "Global ranking scores");
  add_common(rank_cmd, rank.common, true);
  add_solver_flags(rank_cmd, rank.common);
  rank_cmd->add_option("--method", rank.method, "Estimator")
      ->capture_default_str()
      ->check(CLI::IsMember({"l2", "hlasso", "lbi", "lasso-l2"}));
  add_lambda_flags(rank_cmd, rank.lambda);
  add_lbi_flags(rank_cmd, rank.lbi);

  auto* detect_cmd = app.add_subcommand("detect", "Outlier detection report");
  add_common(detect_cmd, detect.common, true);
  add_solver_flags(detect_cmd, detect.common);
  detect_cmd->add_option("--solver", detect.solver, "Path solver")
      ->capture_default_str()
      ->check(CLI::IsMember({"lasso", "lbi"}));
  add_lambda_flags(detect_cmd, detect.lambda);
  add_lbi_flags(detect_cmd, detect.lbi);

  auto* path_cmd = app.add_subcommand("path", "Regularization path export");
  add_common(path_cmd, path.common, true);
  add_solver_flags(path_cmd, path.common);
  path_cmd->add_option("--solver", path.solver, "Path solver")
      ->capture_default_str()
      ->check(CLI::IsMember({"lasso", "lbi"}));
  add_lambda_flags(path_cmd, path.lambda);
  add_lbi_flags(path_cmd, path.lbi);

  SimulateCommand sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a synthetic comparison dataset");
  add_common(sim_cmd, sim.common, false);
  sim_cmd->add_option("--generator", sim.generator, "Generator")
      ->capture_default_str()
      ->check(CLI::IsMember({"flip", "gaussian", "sports"}));
  sim_cmd->add_option("--n", sim.n, "Items (teams)")->capture_default_str();
  sim_cmd->add_option("--sn,--m", sim.m, "Comparisons (games)")->capture_default_str();
  sim_cmd->add_option("--op,--outlier-frac", sim.op, "Outlier fraction")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--sigma", sim.sigma, "Noise level")->capture_default_str();
  sim_cmd->add_option("--magnitude", sim.magnitude, "Outlier magnitude (gaussian)")->capture_default_str();
  sim_cmd->add_option("--home-advantage", sim.home, "Planted intercept (sports)")->capture_default_str();

  GridCommand grid;
  auto* grid_cmd = app.add_subcommand("grid", "AUC over (SN, OP) cells of flip data");
  add_common(grid_cmd, grid.common, false);
  grid_cmd->add_option("--method", grid.method, "Path solver")
      ->capture_default_str()
      ->check(CLI::IsMember({"lasso", "lbi"}));
  grid_cmd->add_option("--tol", grid.common.tol, "LASSO optimality tolerance")->capture_default_str();
  grid_cmd->add_option("--max-iters", grid.common.max_iters, "Iteration cap");
  grid_cmd->add_option("--n", grid.n, "Items")->capture_default_str();
  grid_cmd->add_option("--sn", grid.sn, "Comparison counts")->delimiter(',');
  grid_cmd->add_option("--op", grid.op, "Outlier fractions")->delimiter(',');
  grid_cmd->add_option("--repeats", grid.repeats, "Repeats per cell")->capture_default_str();
  grid_cmd->add_option("--threads", grid.threads, "Worker threads")->capture_default_str();
  add_lbi_flags(grid_cmd, grid.lbi);

  ImageCommand image;
  auto* image_cmd = app.add_subcommand("image-sim", "Image reconstruction from noisy pixel differences");
  add_common(image_cmd, image.common, false);
  image_cmd->add_option("--width", image.width, "Image width")->capture_default_str();
  image_cmd->add_option("--height", image.height, "Image height")->capture_default_str();
  image_cmd->add_option("--radius", image.radius, "Neighbourhood radius")->capture_default_str();
  image_cmd->add_option("--sigma", image.sigma, "Noise level")->capture_default_str();
  image_cmd->add_option("--outlier-frac", image.frac, "Outlier fraction")->capture_default_str();
  image_cmd->add_option("--magnitude", image.magnitude, "Outlier magnitude")->capture_default_str();
  image.top_frac_opt = image_cmd->add_option("--top-frac", image.top_frac, "LBI support budget (default: outlier fraction)")
                           ->check(CLI::Range(0.0, 1.0));
  image_cmd->add_option("--max-iters", image.common.max_iters, "LBI iteration cap");
  add_lbi_flags(image_cmd, image.lbi);

  CheckCommand check;
  auto* check_cmd = app.add_subcommand("check", "Support-recovery diagnostics for a candidate outlier set");
  add_common(check_cmd, check.common, true);
  check_cmd->add_flag("--intercept", check.common.intercept, "Include the home-advantage intercept");
  check_cmd->add_option("--delimiter", check.common.delimiter, "Input field delimiter")->capture_default_str();
  check_cmd->add_option("--support", check.support, "Support file (comparison indices)")->required();
  check_cmd->add_option("--truth", check.truth, "Planted outliers (comparison_index,gamma_star)");
  check.sigma_opt = check_cmd->add_option("--sigma", check.sigma, "Noise level (default: drop-refit residual scale)")
                        ->check(CLI::PositiveNumber);
  check.kappa_opt = check_cmd->add_option("--kappa", check.kappa, "LBI kappa for the stopping-time bound")
                        ->check(CLI::PositiveNumber);
  check.dt_opt = check_cmd->add_option("--dt", check.dt, "LBI step size")->check(CLI::PositiveNumber);

  Common tsr_common;
  auto* tsr_cmd = app.add_subcommand("tsr", "Transitivity satisfaction rate of a complete tournament");
  add_common(tsr_cmd, tsr_common, true);
  tsr_cmd->add_option("--delimiter", tsr_common.delimiter, "Input field delimiter")->capture_default_str();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (rank_cmd->parsed()) return cmd_rank(rank, false, out);
    if (detect_cmd->parsed()) return cmd_rank(detect, true, out);
    if (path_cmd->parsed()) return cmd_path(path, out);
    if (sim_cmd->parsed()) return cmd_simulate(sim, out);
    if (grid_cmd->parsed()) return cmd_grid(grid, out);
    if (image_cmd->parsed()) return cmd_image(image, out);
    if (check_cmd->parsed()) return cmd_check(check, out);
    if (tsr_cmd->parsed()) return cmd_tsr(tsr_common, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace robrank::cli
