#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace softsensor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<std::size_t>;
using Mask = std::vector<bool>;

}  // namespace softsensor
