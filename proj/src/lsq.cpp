#include "trapnoise/lsq.hpp"

#include "trapnoise/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace trapnoise::lsq {

namespace {

enum class State { Lower, Upper, Free };

}  // namespace

Result bounded_least_squares(const Eigen::MatrixXd& a_in, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& lower_in, const Eigen::VectorXd& upper_in) {
  const Eigen::Index m = a_in.rows();
  const Eigen::Index n = a_in.cols();
  if (b.size() != m || lower_in.size() != n || upper_in.size() != n) {
    throw Error(ErrorKind::InvalidInput, "least squares: dimension mismatch");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(lower_in[j] <= upper_in[j])) {
      throw Error(ErrorKind::Infeasible, "least squares: lower bound exceeds upper bound");
    }
  }

  // Work with unit-norm columns; zero columns are pinned to a bound.
  Eigen::VectorXd scale(n);
  Eigen::MatrixXd a = a_in;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = a.col(j).norm();
    scale[j] = s > 0.0 ? s : 1.0;
    a.col(j) /= scale[j];
  }
  const Eigen::VectorXd lower = lower_in.cwiseProduct(scale);
  const Eigen::VectorXd upper = upper_in.cwiseProduct(scale);

  std::vector<State> state(n);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> pinned(n, false);
  for (Eigen::Index j = 0; j < n; ++j) {
    pinned[j] = a_in.col(j).squaredNorm() == 0.0;
    if (std::isfinite(lower[j])) {
      x[j] = lower[j];
      state[j] = State::Lower;
    } else if (std::isfinite(upper[j])) {
      x[j] = upper[j];
      state[j] = State::Upper;
    } else {
      x[j] = 0.0;
      state[j] = pinned[j] ? State::Lower : State::Free;
    }
  }

  const double tol = 1e3 * std::numeric_limits<double>::epsilon() *
                     std::max(1.0, b.norm()) * std::sqrt(static_cast<double>(n) + 1.0);
  const int max_iterations = 30 * static_cast<int>(n) + 100;

  Result result;
  std::vector<bool> blocked(n, false);
  bool pending_free = false;
  for (Eigen::Index j = 0; j < n; ++j) pending_free = pending_free || state[j] == State::Free;

  Eigen::Index entering = -1;
  while (result.iterations < max_iterations) {
    ++result.iterations;
    if (!pending_free) {
      const Eigen::VectorXd w = a.transpose() * (b - a * x);
      entering = -1;
      double best = tol;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (state[j] == State::Free || blocked[j] || pinned[j]) continue;
        const bool wants_up = state[j] == State::Lower && w[j] > best && upper[j] > lower[j];
        const bool wants_down = state[j] == State::Upper && -w[j] > best && upper[j] > lower[j];
        if (wants_up || wants_down) {
          best = std::abs(w[j]);
          entering = j;
        }
      }
      if (entering < 0) {
        result.converged = true;
        break;
      }
      state[entering] = State::Free;
    }
    pending_free = false;

    // Inner loop: move the free set toward its unconstrained optimum without
    // leaving the box.
    bool first_pass = true;
    while (true) {
      std::vector<Eigen::Index> free;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (state[j] == State::Free) free.push_back(j);
      }
      if (free.empty()) break;
      Eigen::VectorXd rhs = b;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (state[j] != State::Free) rhs -= a.col(j) * x[j];
      }
      Eigen::MatrixXd af(m, static_cast<Eigen::Index>(free.size()));
      for (std::size_t k = 0; k < free.size(); ++k) af.col(static_cast<Eigen::Index>(k)) = a.col(free[k]);
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(af);
      const Eigen::VectorXd z = cod.solve(rhs);

      if (first_pass && entering >= 0) {
        std::size_t k = 0;
        while (free[k] != entering) ++k;
        const double ze = z[static_cast<Eigen::Index>(k)];
        const bool wrong_way = (x[entering] == lower[entering] && ze <= lower[entering]) ||
                               (x[entering] == upper[entering] && ze >= upper[entering]);
        if (wrong_way) {
          state[entering] = x[entering] == lower[entering] ? State::Lower : State::Upper;
          blocked[entering] = true;
          break;
        }
      }
      first_pass = false;

      double alpha = 1.0;
      Eigen::Index hit = -1;
      bool hit_lower = true;
      for (std::size_t k = 0; k < free.size(); ++k) {
        const Eigen::Index j = free[k];
        const double zj = z[static_cast<Eigen::Index>(k)];
        double step = 1.0;
        const bool below = zj < lower[j];
        if (below) {
          step = (x[j] - lower[j]) / (x[j] - zj);
        } else if (zj > upper[j]) {
          step = (upper[j] - x[j]) / (zj - x[j]);
        }
        if (step < alpha) {
          alpha = step;
          hit = j;
          hit_lower = below;
        }
      }
      alpha = std::max(alpha, 0.0);
      for (std::size_t k = 0; k < free.size(); ++k) {
        const Eigen::Index j = free[k];
        x[j] += alpha * (z[static_cast<Eigen::Index>(k)] - x[j]);
      }
      if (alpha >= 1.0) {
        std::fill(blocked.begin(), blocked.end(), false);
        break;
      }
      // Variables that reached a bound leave the free set; the blocking one
      // always does.
      if (hit >= 0) x[hit] = hit_lower ? lower[hit] : upper[hit];
      for (const Eigen::Index j : free) {
        const double span = std::max(1.0, std::abs(x[j]));
        if (std::isfinite(lower[j]) && x[j] <= lower[j] + 1e-14 * span) {
          x[j] = lower[j];
          state[j] = State::Lower;
        } else if (std::isfinite(upper[j]) && x[j] >= upper[j] - 1e-14 * span) {
          x[j] = upper[j];
          state[j] = State::Upper;
        }
      }
    }
  }

  // Undo the column scaling; variables at a bound get the caller's bound
  // exactly rather than bound * s / s.
  result.x = x.cwiseQuotient(scale);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (state[j] == State::Lower && std::isfinite(lower_in[j])) result.x[j] = lower_in[j];
    if (state[j] == State::Upper && std::isfinite(upper_in[j])) result.x[j] = upper_in[j];
    result.x[j] = std::clamp(result.x[j], lower_in[j], upper_in[j]);
  }
  result.residual_sq = (a_in * result.x - b).squaredNorm();
  return result;
}

Result nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.cols();
  return bounded_least_squares(a, b, Eigen::VectorXd::Zero(n),
                               Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity()));
}

}  // namespace trapnoise::lsq
