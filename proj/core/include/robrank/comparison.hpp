#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "robrank/types.hpp"

namespace robrank {

/// Which side of a comparison hosted the encounter (sports intercept data).
enum class Host : std::int8_t { none = 0, i = 1, j = 2 };

/// Bijection between external item labels and dense indices 0..n-1.
/// Indices are assigned in order of first appearance.
class ItemTable {
 public:
  ItemTable() = default;
  explicit ItemTable(std::vector<std::string> labels);

  Index intern(std::string_view label);
  [[nodiscard]] std::optional<Index> find(std::string_view label) const;
  [[nodiscard]] const std::string& label(Index index) const { return labels_.at(index); }
  [[nodiscard]] Index size() const { return labels_.size(); }
  [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }

  friend bool operator==(const ItemTable& a, const ItemTable& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, Index> index_;
};

/// One observation: rater `rater` prefers item `i` to item `j` by `value`.
/// The record (i, j, v) denotes the same observation as (j, i, -v).
struct Comparison {
  Index i = 0;
  Index j = 0;
  double value = 0.0;
  double weight = 1.0;
  std::optional<std::string> rater;
  Host host = Host::none;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

/// Immutable list of comparisons over an item table. Duplicated pairs are
/// kept as separate rows.
class ComparisonDataset {
 public:
  ComparisonDataset() = default;
  ComparisonDataset(ItemTable items, std::vector<Comparison> comparisons, bool has_intercept_info = false);

  [[nodiscard]] Index n() const { return items_.size(); }
  [[nodiscard]] Index m() const { return comparisons_.size(); }
  [[nodiscard]] const ItemTable& items() const { return items_; }
  [[nodiscard]] const std::vector<Comparison>& comparisons() const { return comparisons_; }
  [[nodiscard]] const Comparison& operator[](Index r) const { return comparisons_[r]; }
  [[nodiscard]] bool has_intercept_info() const { return has_intercept_info_; }
  [[nodiscard]] bool has_rater_info() const;

  /// Raw comparison values Y in row order.
  [[nodiscard]] Vector values() const;

  /// True if every value is exactly +1 or -1.
  [[nodiscard]] bool is_dichotomous() const;

  /// Dataset restricted to `rows` (kept in the given order); the item table is unchanged.
  [[nodiscard]] ComparisonDataset subset(std::span<const Index> rows) const;

  /// Dataset with `rows` deleted.
  [[nodiscard]] ComparisonDataset without(std::span<const Index> rows) const;

  friend bool operator==(const ComparisonDataset&, const ComparisonDataset&) = default;

 private:
  ItemTable items_;
  std::vector<Comparison> comparisons_;
  bool has_intercept_info_ = false;
};

/// Builds a dataset over items labelled "0".."n-1" from an edge list.
ComparisonDataset make_dataset(Index n, std::span<const std::pair<Index, Index>> edges, std::span<const double> values);

/// Column names used by load_csv. Defaults follow the item_i,item_j,value
/// [,rater][,weight][,host] layout.
struct CsvSchema {
  std::string item_i = "item_i";
  std::string item_j = "item_j";
  std::string value = "value";
  std::string rater = "rater";
  std::string weight = "weight";
  std::string host = "host";
  char delimiter = ',';
};

/// Parses delimiter-separated comparison data with a header row. Throws
/// DataError naming the offending line on malformed input.
ComparisonDataset load_csv(std::istream& in, const CsvSchema& schema = {});
ComparisonDataset load_csv_file(const std::string& path, const CsvSchema& schema = {});

/// Writes `dataset` in the comparison CSV schema; load_csv reproduces it exactly.
void write_csv(std::ostream& out, const ComparisonDataset& dataset);

/// `label,index` mapping for the dense re-indexing.
void write_item_map(std::ostream& out, const ItemTable& items);

/// Connected components of the comparison graph over all declared items,
/// each sorted ascending, ordered by their smallest member.
std::vector<IndexSet> connected_components(Index n, std::span<const Comparison> comparisons);
std::vector<IndexSet> connectivity(const ComparisonDataset& dataset);

/// Throws DataError listing the components when the graph is not connected.
void require_connected(const ComparisonDataset& dataset);

}  // namespace robrank
