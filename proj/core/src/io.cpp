#include "robrank/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json_emit.hpp"
#include "robrank/error.hpp"
#include "robrank/format.hpp"
#include "robrank/report.hpp"

namespace robrank {

using detail::Json;

void write_ranking_csv(std::ostream& out, const ItemTable& items, const Vector& theta) {
  out << "label,rank_position,score\n";
  for (const auto& row : ranking_rows(items, theta))
    out << csv_quote(row.label) << ',' << row.position << ',' << format_real(row.score) << '\n';
}

void write_path_csv(std::ostream& out, const RegularizationPath& path) {
  out << (path.parameter == PathParameter::lambda ? "lambda" : "t") << ",comparison_index,gamma\n";
  for (const auto& p : path.points) {
    const std::string param = format_real(p.param);
    if (p.gamma.empty()) out << param << ",,\n";
    for (const auto& [r, g] : p.gamma) out << param << ',' << r << ',' << format_real(g) << '\n';
  }
}

void write_entry_order_csv(std::ostream& out, const RegularizationPath& path) {
  const IndexSet order = detection_order(path);
  std::vector<Index> rank(order.size());
  for (Index pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos + 1;
  out << "comparison_index,entry_rank\n";
  for (Index r = 0; r < rank.size(); ++r) out << r << ',' << rank[r] << '\n';
}

void write_grid_csv(std::ostream& out, const std::vector<GridCell>& cells) {
  out << "SN,OP,mean_auc,sd_auc,repeats,method\n";
  for (const auto& c : cells)
    out << c.sn << ',' << format_real(c.op) << ',' << format_real(c.mean_auc) << ',' << format_real(c.sd_auc) << ','
        << c.repeats << ',' << to_string(c.method) << '\n';
}

void write_truth_csv(std::ostream& out, const SyntheticInstance& instance) {
  out << "comparison_index,gamma_star\n";
  for (Index r : instance.truth_outliers)
    out << r << ',' << format_real(instance.truth_gamma[static_cast<Eigen::Index>(r)]) << '\n';
}

void write_truth_scores_csv(std::ostream& out, const SyntheticInstance& instance) {
  out << "item_index,label,theta\n";
  const auto& items = instance.dataset.items();
  for (Index k = 0; k < items.size(); ++k)
    out << k << ',' << csv_quote(items.label(k)) << ',' << format_real(instance.truth_theta[static_cast<Eigen::Index>(k)])
        << '\n';
}

std::string consistency_report_json(const ConsistencyReport& r) {
  auto opt = [](const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); };
  Json j = Json::object();
  j["support_size"] = r.support.size();
  j["support"] = r.support;
  j["m"] = r.m;
  j["cyclic_dimension"] = r.l;
  j["intercept_projected"] = r.intercept_projected;
  j["sigma"] = r.sigma;
  j["c_min"] = r.c_min;
  j["irrepresentable_value"] = opt(r.irrep_value);
  j["eta"] = opt(r.eta);
  j["mu_psi"] = r.mu_psi;
  j["p_ss_norm"] = r.p_ss_norm;
  j["gamma_min"] = opt(r.gamma_min);
  j["gamma_max"] = opt(r.gamma_max);
  j["lambda_bound"] = opt(r.lambda_bound);
  j["h_bound"] = opt(r.h_bound);
  j["c3_threshold"] = opt(r.c3_threshold);
  j["B_plugin"] = opt(r.B_plugin);
  j["kappa"] = opt(r.kappa);
  j["step_h"] = opt(r.step_h);
  j["h_restricted"] = opt(r.h_restricted);
  j["tau_bar"] = opt(r.tau_bar);
  j["c1_holds"] = r.c1_holds();
  j["c2_holds"] = r.c2_holds();
  j["c3_holds"] = r.c3_holds();
  j["plugins"] = r.plugins;
  return detail::dump_json(j);
}

namespace {

std::string strip(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Index parse_index(const std::string& text, Index line) {
  Index v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw DataError("support file line " + std::to_string(line) + ": expected a comparison index, got '" + text + "'");
  return v;
}

}  // namespace

IndexSet load_support(std::istream& in) {
  IndexSet out;
  std::string line;
  Index line_no = 0;
  std::optional<std::size_t> column;  // set when a header names comparison_index
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(strip(f));
    if (first) {
      first = false;
      const auto it = std::find(fields.begin(), fields.end(), "comparison_index");
      if (it != fields.end()) {
        column = static_cast<std::size_t>(it - fields.begin());
        continue;
      }
    }
    const std::size_t c = column.value_or(0);
    if (c >= fields.size()) throw DataError("support file line " + std::to_string(line_no) + ": missing column");
    out.push_back(parse_index(fields[c], line_no));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

IndexSet load_support_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open support file '" + path + "'");
  return load_support(in);
}

Vector load_truth_gamma(std::istream& in, Index m) {
  Vector gamma = Vector::Zero(static_cast<Eigen::Index>(m));
  std::string line;
  Index line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("comparison_index", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError("truth file line " + std::to_string(line_no) + ": expected comparison_index,gamma_star");
    const Index r = parse_index(strip(line.substr(0, comma)), line_no);
    if (r >= m) throw DataError("truth file line " + std::to_string(line_no) + ": comparison index out of range");
    const std::string v = strip(line.substr(comma + 1));
    double g = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), g);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
      throw DataError("truth file line " + std::to_string(line_no) + ": cannot parse gamma_star '" + v + "'");
    gamma[static_cast<Eigen::Index>(r)] = g;
  }
  return gamma;
}

Vector load_truth_gamma_file(const std::string& path, Index m) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open truth file '" + path + "'");
  return load_truth_gamma(in, m);
}

}  // namespace robrank
