#pragma once

#include <Eigen/Dense>

namespace lowcon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace lowcon
