#pragma once

#include <Eigen/Dense>

namespace jumpflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Execution policy for the data-parallel kernels. Serial paths are the
// reference implementation; parallel paths must reproduce them bit-for-bit.
enum class Exec { serial, parallel };

}  // namespace jumpflow
