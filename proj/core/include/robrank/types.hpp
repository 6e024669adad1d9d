#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace robrank {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::size_t;
using IndexSet = std::vector<Index>;

}  // namespace robrank
