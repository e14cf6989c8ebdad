#pragma once

#include <Eigen/Core>

namespace pca::detail {

struct LpSolution {
  double value = 0;
  Eigen::VectorXd x;     // primal optimum
  Eigen::VectorXd dual;  // one multiplier per row of A, all >= 0
  int pivots = 0;
};

/// max c.x subject to A x <= b, x >= 0, for b >= 0 (the origin is
/// feasible). Dense tableau with Bland's rule, so it always terminates.
/// Throws InvalidArgument for negative b and Error when unbounded.
LpSolution maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c);

}  // namespace pca::detail
