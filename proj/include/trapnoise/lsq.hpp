#pragma once

#include <Eigen/Dense>

namespace trapnoise::lsq {

struct Result {
  Eigen::VectorXd x;
  double residual_sq = 0.0;  // ||A x - b||^2
  int iterations = 0;
  bool converged = false;
};

// min ||A x - b|| subject to lower <= x <= upper, by the Stark-Parker
// bounded-variable active-set method. Bounds may be infinite. Within the free
// set each subproblem takes the minimum-norm solution, so collinear columns
// do not make it singular. Which of several identical columns carries the
// weight is unspecified; callers that care merge them first.
Result bounded_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

// x >= 0 special case (Lawson-Hanson NNLS is the same iteration with no
// upper bounds).
Result nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

}  // namespace trapnoise::lsq
