#include "robrank/comparison.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "robrank/error.hpp"
#include "robrank/format.hpp"

namespace robrank {

ItemTable::ItemTable(std::vector<std::string> labels) {
  for (auto& l : labels) {
    if (index_.contains(l)) throw DataError("duplicate item label '" + l + "'");
    index_.emplace(l, labels_.size());
    labels_.push_back(std::move(l));
  }
}

Index ItemTable::intern(std::string_view label) {
  std::string key(label);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const Index idx = labels_.size();
  index_.emplace(key, idx);
  labels_.push_back(std::move(key));
  return idx;
}

std::optional<Index> ItemTable::find(std::string_view label) const {
  if (auto it = index_.find(std::string(label)); it != index_.end()) return it->second;
  return std::nullopt;
}

ComparisonDataset::ComparisonDataset(ItemTable items, std::vector<Comparison> comparisons, bool has_intercept_info)
    : items_(std::move(items)), comparisons_(std::move(comparisons)), has_intercept_info_(has_intercept_info) {
  const Index n = items_.size();
  for (Index r = 0; r < comparisons_.size(); ++r) {
    const auto& c = comparisons_[r];
    if (c.i >= n || c.j >= n) throw DataError("comparison " + std::to_string(r) + ": item index out of range");
    if (c.i == c.j) throw DataError("comparison " + std::to_string(r) + ": self-comparison of '" + items_.label(c.i) + "'");
    if (!std::isfinite(c.value)) throw DataError("comparison " + std::to_string(r) + ": non-finite value");
    if (!(c.weight > 0.0) || !std::isfinite(c.weight))
      throw DataError("comparison " + std::to_string(r) + ": weight must be positive and finite");
  }
}

bool ComparisonDataset::has_rater_info() const {
  return std::any_of(comparisons_.begin(), comparisons_.end(), [](const Comparison& c) { return c.rater.has_value(); });
}

Vector ComparisonDataset::values() const {
  Vector y(static_cast<Eigen::Index>(m()));
  for (Index r = 0; r < m(); ++r) y[static_cast<Eigen::Index>(r)] = comparisons_[r].value;
  return y;
}

bool ComparisonDataset::is_dichotomous() const {
  return !comparisons_.empty() &&
         std::all_of(comparisons_.begin(), comparisons_.end(), [](const Comparison& c) { return std::abs(c.value) == 1.0; });
}

ComparisonDataset ComparisonDataset::subset(std::span<const Index> rows) const {
  std::vector<Comparison> kept;
  kept.reserve(rows.size());
  for (Index r : rows) kept.push_back(comparisons_.at(r));
  return ComparisonDataset(items_, std::move(kept), has_intercept_info_);
}

ComparisonDataset ComparisonDataset::without(std::span<const Index> rows) const {
  std::vector<bool> drop(m(), false);
  for (Index r : rows) drop.at(r) = true;
  IndexSet keep;
  for (Index r = 0; r < m(); ++r)
    if (!drop[r]) keep.push_back(r);
  return subset(keep);
}

ComparisonDataset make_dataset(Index n, std::span<const std::pair<Index, Index>> edges, std::span<const double> values) {
  if (edges.size() != values.size()) throw UsageError("make_dataset: edge and value counts differ");
  std::vector<std::string> labels(n);
  for (Index k = 0; k < n; ++k) labels[k] = std::to_string(k);
  std::vector<Comparison> rows;
  rows.reserve(edges.size());
  for (Index r = 0; r < edges.size(); ++r) {
    Comparison c;
    c.i = edges[r].first;
    c.j = edges[r].second;
    c.value = values[r];
    rows.push_back(std::move(c));
  }
  return ComparisonDataset(ItemTable(std::move(labels)), std::move(rows));
}

namespace {

// Splits one record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_record(std::string_view line, char delim, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw DataError("line " + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view text, std::size_t line_no, std::string_view column) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " + std::string(column) + " '" + std::string(text) + "'");
  return v;
}

}  // namespace

ComparisonDataset load_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_record(line, schema.delimiter, line_no);
      break;
    }
  }
  if (header.empty()) throw DataError("empty comparison file");
  if (header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (trim(header[k]) == name) return k;
    return std::nullopt;
  };
  const auto ci = column(schema.item_i), cj = column(schema.item_j), cv = column(schema.value);
  if (!ci || !cj || !cv)
    throw DataError("line " + std::to_string(line_no) + ": header must contain " + schema.item_i + ", " + schema.item_j +
                    " and " + schema.value);
  const auto crater = column(schema.rater), cweight = column(schema.weight), chost = column(schema.host);

  ItemTable items;
  std::vector<Comparison> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_record(line, schema.delimiter, line_no);
    if (f.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(f.size()));
    const auto li = trim(f[*ci]), lj = trim(f[*cj]);
    if (li.empty() || lj.empty()) throw DataError("line " + std::to_string(line_no) + ": empty item label");
    if (li == lj) throw DataError("line " + std::to_string(line_no) + ": self-comparison of '" + std::string(li) + "'");
    Comparison c;
    c.i = items.intern(li);
    c.j = items.intern(lj);
    c.value = parse_real(f[*cv], line_no, schema.value);
    if (!std::isfinite(c.value)) throw DataError("line " + std::to_string(line_no) + ": non-finite value");
    if (crater) {
      const auto r = trim(f[*crater]);
      if (!r.empty()) c.rater = std::string(r);
    }
    if (cweight) {
      const auto w = trim(f[*cweight]);
      if (!w.empty()) {
        c.weight = parse_real(w, line_no, schema.weight);
        if (!(c.weight > 0.0) || !std::isfinite(c.weight))
          throw DataError("line " + std::to_string(line_no) + ": weight must be positive and finite");
      }
    }
    if (chost) {
      const auto h = trim(f[*chost]);
      if (h == "i") c.host = Host::i;
      else if (h == "j") c.host = Host::j;
      else if (h == "none" || h.empty()) c.host = Host::none;
      else throw DataError("line " + std::to_string(line_no) + ": host must be one of i, j, none");
    }
    rows.push_back(std::move(c));
  }
  if (rows.empty()) throw DataError("comparison file has a header but no data rows");
  return ComparisonDataset(std::move(items), std::move(rows), chost.has_value());
}

ComparisonDataset load_csv_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_csv(in, schema);
}

void write_csv(std::ostream& out, const ComparisonDataset& dataset) {
  const bool raters = dataset.has_rater_info();
  const bool host = dataset.has_intercept_info();
  out << "item_i,item_j,value";
  if (raters) out << ",rater";
  out << ",weight";
  if (host) out << ",host";
  out << '\n';
  for (const auto& c : dataset.comparisons()) {
    out << csv_quote(dataset.items().label(c.i)) << ',' << csv_quote(dataset.items().label(c.j)) << ','
        << format_real(c.value);
    if (raters) out << ',' << (c.rater ? csv_quote(*c.rater) : std::string());
    out << ',' << format_real(c.weight);
    if (host) out << ',' << (c.host == Host::i ? "i" : c.host == Host::j ? "j" : "none");
    out << '\n';
  }
}

void write_item_map(std::ostream& out, const ItemTable& items) {
  out << "label,index\n";
  for (Index k = 0; k < items.size(); ++k) out << csv_quote(items.label(k)) << ',' << k << '\n';
}

std::vector<IndexSet> connected_components(Index n, std::span<const Comparison> comparisons) {
  std::vector<Index> parent(n);
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& c : comparisons) {
    const Index a = find(c.i), b = find(c.j);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<IndexSet> components;
  std::vector<Index> slot(n, n);
  for (Index v = 0; v < n; ++v) {
    const Index root = find(v);
    if (slot[root] == n) {
      slot[root] = components.size();
      components.emplace_back();
    }
    components[slot[root]].push_back(v);
  }
  return components;
}

std::vector<IndexSet> connectivity(const ComparisonDataset& dataset) {
  return connected_components(dataset.n(), dataset.comparisons());
}

void require_connected(const ComparisonDataset& dataset) {
  const auto comps = connectivity(dataset);
  if (comps.size() == 1) return;
  std::ostringstream msg;
  msg << "comparison graph is not connected (" << comps.size() << " components):";
  for (const auto& comp : comps) {
    msg << " {";
    for (Index k = 0; k < comp.size(); ++k) {
      if (k == 8) {
        msg << ", ... (" << comp.size() << " items)";
        break;
      }
      msg << (k ? ", " : "") << dataset.items().label(comp[k]);
    }
    msg << '}';
  }
  throw DataError(msg.str());
}

}  // namespace robrank
