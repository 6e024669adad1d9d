#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "robrank/comparison.hpp"
#include "robrank/diagnostics.hpp"
#include "robrank/hodge.hpp"
#include "robrank/lasso.hpp"
#include "robrank/simbench.hpp"
#include "robrank/types.hpp"

namespace robrank {

/// `label,rank_position,score`, descending score.
void write_ranking_csv(std::ostream& out, const ItemTable& items, const Vector& theta);

/// `lambda,comparison_index,gamma` (or `t,...` for an LBI path), one row per
/// nonzero at each recorded point. Points with an empty support emit a row
/// with an empty index so every recorded parameter value appears.
void write_path_csv(std::ostream& out, const RegularizationPath& path);

/// `comparison_index,entry_rank`, rank 1 = first detected, for every comparison.
void write_entry_order_csv(std::ostream& out, const RegularizationPath& path);

/// `SN,OP,mean_auc,sd_auc,repeats,method`.
void write_grid_csv(std::ostream& out, const std::vector<GridCell>& cells);

/// `comparison_index,gamma_star` for the nonzero planted outliers.
void write_truth_csv(std::ostream& out, const SyntheticInstance& instance);

/// `item_index,label,theta` ground-truth scores.
void write_truth_scores_csv(std::ostream& out, const SyntheticInstance& instance);

/// Consistency diagnostics as JSON (unset bounds are null).
std::string consistency_report_json(const ConsistencyReport& report);

/// Reads a support file: either a CSV with a `comparison_index` column or one
/// index per line. Blank lines and lines starting with '#' are skipped.
IndexSet load_support(std::istream& in);
IndexSet load_support_file(const std::string& path);

/// Reads a `comparison_index,gamma_star` file into a dense vector of length m.
Vector load_truth_gamma(std::istream& in, Index m);
Vector load_truth_gamma_file(const std::string& path, Index m);

}  // namespace robrank
