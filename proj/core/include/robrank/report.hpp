#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "robrank/comparison.hpp"
#include "robrank/hodge.hpp"
#include "robrank/types.hpp"

namespace robrank {

using ReportValue = std::variant<std::monostate, bool, long long, double, std::string>;

struct RankingRow {
  std::string label;
  Index position = 0;  // 1-based, descending score
  double score = 0.0;
};

struct OutlierRow {
  Index row = 0;  // comparison index in the input
  std::string item_i;
  std::string item_j;
  std::optional<std::string> rater;
  double value = 0.0;
  double gamma = 0.0;
  Index entry_rank = 0;  // 1-based
};

/// Summary of one CLI run. Field order in the emitted forms is fixed.
struct RunReport {
  std::string command;
  std::string method;
  std::vector<std::pair<std::string, ReportValue>> parameters;
  std::vector<RankingRow> ranking;
  std::optional<double> intercept;
  std::optional<double> residual_l2;
  std::optional<long long> iterations;
  std::vector<OutlierRow> outliers;  // ascending entry_rank
  std::vector<std::pair<std::string, double>> timing;  // seconds per phase; omitted when empty
};

/// Ranking rows for `theta` by descending score (ties by item index).
std::vector<RankingRow> ranking_rows(const ItemTable& items, const Vector& theta);

enum class ReportFormat { json, csv };

/// JSON carries every field; CSV carries the ranking table followed, after a
/// blank line, by the outlier table when it is nonempty. Reals use 17
/// significant digits.
std::string emit_report(const RunReport& report, ReportFormat format = ReportFormat::json);

/// Inverse of emit_report(json). Throws DataError on malformed input.
RunReport parse_report(std::string_view json);

}  // namespace robrank
