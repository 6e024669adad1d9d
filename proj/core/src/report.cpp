#include "robrank/report.hpp"

#include <algorithm>
#include <numeric>

#include "json_emit.hpp"
#include "robrank/error.hpp"
#include "robrank/format.hpp"

namespace robrank {

using detail::Json;

namespace {

Json to_json(const ReportValue& v) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return x;
        }
      },
      v);
}

ReportValue from_json(const Json& j) {
  switch (j.type()) {
    case Json::value_t::null: return std::monostate{};
    case Json::value_t::boolean: return j.get<bool>();
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned: return j.get<long long>();
    case Json::value_t::number_float: return j.get<double>();
    case Json::value_t::string: return j.get<std::string>();
    default: throw DataError("report: parameter values must be scalars");
  }
}

Json optional_real(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

std::optional<double> read_optional_real(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

std::vector<RankingRow> ranking_rows(const ItemTable& items, const Vector& theta) {
  if (static_cast<Index>(theta.size()) != items.size()) throw UsageError("ranking_rows: score/item count mismatch");
  std::vector<Index> order(items.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return theta[static_cast<Eigen::Index>(a)] > theta[static_cast<Eigen::Index>(b)];
  });
  std::vector<RankingRow> rows;
  rows.reserve(order.size());
  for (Index pos = 0; pos < order.size(); ++pos)
    rows.push_back({items.label(order[pos]), pos + 1, theta[static_cast<Eigen::Index>(order[pos])]});
  return rows;
}

std::string emit_report(const RunReport& r, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out = "label,rank_position,score\n";
    for (const auto& row : r.ranking)
      out += csv_quote(row.label) + ',' + std::to_string(row.position) + ',' + format_real(row.score) + '\n';
    if (!r.outliers.empty()) {
      out += "\ncomparison_index,item_i,item_j,rater,value,gamma,entry_rank\n";
      for (const auto& o : r.outliers)
        out += std::to_string(o.row) + ',' + csv_quote(o.item_i) + ',' + csv_quote(o.item_j) + ',' +
               (o.rater ? csv_quote(*o.rater) : std::string()) + ',' + format_real(o.value) + ',' +
               format_real(o.gamma) + ',' + std::to_string(o.entry_rank) + '\n';
    }
    return out;
  }

  Json j = Json::object();
  j["command"] = r.command;
  j["method"] = r.method;
  Json params = Json::object();
  for (const auto& [k, v] : r.parameters) params[k] = to_json(v);
  j["parameters"] = std::move(params);
  Json ranking = Json::array();
  for (const auto& row : r.ranking) {
    Json e = Json::object();
    e["label"] = row.label;
    e["position"] = row.position;
    e["score"] = row.score;
    ranking.push_back(std::move(e));
  }
  j["ranking"] = std::move(ranking);
  j["intercept"] = optional_real(r.intercept);
  j["residual_l2"] = optional_real(r.residual_l2);
  j["iterations"] = r.iterations ? Json(*r.iterations) : Json(nullptr);
  Json outliers = Json::array();
  for (const auto& o : r.outliers) {
    Json e = Json::object();
    e["comparison_index"] = o.row;
    e["item_i"] = o.item_i;
    e["item_j"] = o.item_j;
    e["rater"] = o.rater ? Json(*o.rater) : Json(nullptr);
    e["value"] = o.value;
    e["gamma"] = o.gamma;
    e["entry_rank"] = o.entry_rank;
    outliers.push_back(std::move(e));
  }
  j["outliers"] = std::move(outliers);
  if (!r.timing.empty()) {
    Json t = Json::object();
    for (const auto& [k, v] : r.timing) t[k] = v;
    j["timing"] = std::move(t);
  }
  return detail::dump_json(j);
}

RunReport parse_report(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report: invalid JSON: ") + e.what());
  }
  try {
    RunReport r;
    r.command = j.at("command").get<std::string>();
    r.method = j.at("method").get<std::string>();
    for (auto it = j.at("parameters").begin(); it != j.at("parameters").end(); ++it)
      r.parameters.emplace_back(it.key(), from_json(it.value()));
    for (const auto& e : j.at("ranking"))
      r.ranking.push_back({e.at("label").get<std::string>(), e.at("position").get<Index>(), e.at("score").get<double>()});
    r.intercept = read_optional_real(j, "intercept");
    r.residual_l2 = read_optional_real(j, "residual_l2");
    if (j.contains("iterations") && !j["iterations"].is_null()) r.iterations = j["iterations"].get<long long>();
    for (const auto& e : j.at("outliers")) {
      OutlierRow o;
      o.row = e.at("comparison_index").get<Index>();
      o.item_i = e.at("item_i").get<std::string>();
      o.item_j = e.at("item_j").get<std::string>();
      if (!e.at("rater").is_null()) o.rater = e.at("rater").get<std::string>();
      o.value = e.at("value").get<double>();
      o.gamma = e.at("gamma").get<double>();
      o.entry_rank = e.at("entry_rank").get<Index>();
      r.outliers.push_back(std::move(o));
    }
    if (j.contains("timing"))
      for (auto it = j["timing"].begin(); it != j["timing"].end(); ++it)
        r.timing.emplace_back(it.key(), it.value().get<double>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report: unexpected structure: ") + e.what());
  }
}

}  // namespace robrank
