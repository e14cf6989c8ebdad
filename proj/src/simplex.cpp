#include "pca/detail/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pca/error.hpp"

namespace pca::detail {

namespace {
constexpr double kPivotTolerance = 1e-12;
}

LpSolution maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const Eigen::Index m = A.rows(), n = A.cols();
  if (b.size() != m || c.size() != n) throw InvalidArgument("linear program dimensions disagree");
  if ((b.array() < 0).any()) throw InvalidArgument("right-hand side must be nonnegative");

  // Rows 0..m-1 are constraints, row m is the reduced-cost row; column
  // n + m holds the right-hand side.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.col(n + m).head(m) = b;
  T.row(m).head(n) = c.transpose();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  LpSolution sol;
  for (;;) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j)
      if (T(m, j) > kPivotTolerance) {
        enter = j;
        break;
      }
    if (enter < 0) break;

    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (T(i, enter) <= kPivotTolerance) continue;
      const double ratio = T(i, n + m) / T(i, enter);
      const bool tie = leave >= 0 && std::abs(ratio - best) <= kPivotTolerance;
      if (leave < 0 || ratio < best - kPivotTolerance ||
          (tie && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        best = std::min(best, ratio);
        leave = i;
      }
    }
    if (leave < 0) throw Error("linear program is unbounded");

    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
    ++sol.pivots;
  }

  sol.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[static_cast<std::size_t>(i)] < n) sol.x[basis[static_cast<std::size_t>(i)]] = T(i, n + m);
  sol.dual = (-T.row(m).segment(n, m).transpose()).cwiseMax(0.0);
  sol.value = c.dot(sol.x);
  return sol;
}

}  // namespace pca::detail
