#pragma once

#include <Eigen/Dense>
#include <random>

namespace qnvb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// The single random engine used across the library. Its textual state is
/// what checkpoints persist.
using Rng = std::mt19937_64;

}  // namespace qnvb
