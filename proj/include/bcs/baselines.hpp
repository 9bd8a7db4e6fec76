#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bcs/conic.hpp"
#include "bcs/instance.hpp"

namespace bcs {

struct SolverFailure : std::runtime_error {
  SolveStatus status;
  explicit SolverFailure(SolveStatus s)
      : std::runtime_error(std::string("solver failure: ") + to_string(s)), status(s) {}
};

enum class StepRule { fixed_1_over_L, backtracking };

struct RwrSettings {
  double lambda = 0.0;  // <= 0: use 0.1 * ||A' y||_inf
  int restarts = 10;
  int max_iters = 5000;
  StepRule step_rule = StepRule::fixed_1_over_L;
  double tol = 1e-8;  // stop on iterate change
};

struct GreedySettings {
  int k_max = 0;  // support budget; <= 0 is invalid at call time
  double residual_tol = 1e-9;
};

// Box-constrained basis pursuit: min sum x_i s.t. y = Ax (or the eta band), x in [0,1]^n.
inline Eigen::VectorXd solve_box_bp(const Instance& inst, const SolverSettings& settings = {},
                                    ConicSolution* diagnostics = nullptr) {
  const int n = inst.n, m = inst.m;
  const bool noisy = inst.eta > 0.0;

  ConicProgram prog;
  prog.c = Eigen::VectorXd::Ones(n);
  const int meas_rows = noisy ? 2 * m : m;
  const int p = meas_rows + 2 * n;
  prog.h = Eigen::VectorXd::Zero(p);
  std::vector<Eigen::Triplet<double>> trip;
  int row = 0;

  for (int r = 0; r < m; ++r) {
    if (!noisy) {
      for (int j = 0; j < n; ++j) trip.emplace_back(row, j, inst.A(r, j));
      prog.h[row] = inst.y[r];
      ++row;
    } else {
      for (int j = 0; j < n; ++j) trip.emplace_back(row, j, inst.A(r, j));
      prog.h[row] = inst.eta + inst.y[r];
      ++row;
      for (int j = 0; j < n; ++j) trip.emplace_back(row, j, -inst.A(r, j));
      prog.h[row] = inst.eta - inst.y[r];
      ++row;
    }
  }
  if (!noisy) prog.cones.blocks.push_back(Zero(m));

  for (int j = 0; j < n; ++j) {  // x_j >= 0
    trip.emplace_back(row, j, -1.0);
    prog.h[row] = 0.0;
    ++row;
  }
  for (int j = 0; j < n; ++j) {  // 1 - x_j >= 0
    trip.emplace_back(row, j, 1.0);
    prog.h[row] = 1.0;
    ++row;
  }
  prog.cones.blocks.push_back(Nonneg(2 * n + (noisy ? meas_rows : 0)));

  prog.G.resize(p, n);
  prog.G.setFromTriplets(trip.begin(), trip.end());

  ConicSolution sol = solve(prog, settings);
  if (diagnostics) *diagnostics = sol;
  if (sol.status == SolveStatus::primal_infeasible || sol.status == SolveStatus::dual_infeasible ||
      sol.status == SolveStatus::numeric_failure)
    throw SolverFailure(sol.status);
  return sol.u;
}

namespace detail {

inline double rwr_objective(const Instance& inst, double lambda, const Eigen::VectorXd& x,
                            Eigen::VectorXd& residual) {
  residual.noalias() = inst.y - inst.A * x;
  double pen = 0.0;
  for (int i = 0; i < inst.n; ++i) pen += x[i] - 0.5 * x[i] * x[i];
  return 0.5 * residual.squaredNorm() + lambda * pen;
}

}  // namespace detail

// Concave-penalized least squares 0.5||y - Ax||^2 + lambda sum(x_i - x_i^2/2),
// minimized by projected gradient over the box from random restarts (plus the
// origin). The penalty is concave, so the data term's Lipschitz constant
// ||A||_2^2 alone gives the descent step.
inline Eigen::VectorXd solve_rwr(const Instance& inst, const RwrSettings& settings,
                                 std::uint64_t seed) {
  if (settings.restarts < 1) throw std::invalid_argument("solve_rwr: restarts must be >= 1");
  if (settings.max_iters < 1) throw std::invalid_argument("solve_rwr: max_iters must be >= 1");
  if (settings.tol <= 0.0) throw std::invalid_argument("solve_rwr: tol must be positive");

  const int n = inst.n;
  double lambda = settings.lambda;
  if (lambda <= 0.0)
    lambda = std::max(0.1 * (inst.A.transpose() * inst.y).lpNorm<Eigen::Infinity>(), 1e-12);

  // ||A||_2^2 via the smaller Gram matrix
  double L;
  if (inst.m <= n) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inst.A * inst.A.transpose());
    L = es.eigenvalues().maxCoeff();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inst.A.transpose() * inst.A);
    L = es.eigenvalues().maxCoeff();
  }
  L = std::max(L, 1e-12);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::VectorXd best;
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x(n), grad(n), res(inst.m), trial(n);

  for (int r = 0; r <= settings.restarts; ++r) {
    if (r == 0)
      x.setZero();
    else
      for (int i = 0; i < n; ++i) x[i] = unif(rng);

    double f = detail::rwr_objective(inst, lambda, x, res);
    double step = 1.0 / L;
    for (int it = 0; it < settings.max_iters; ++it) {
      grad.noalias() = -(inst.A.transpose() * res);
      grad += lambda * (Eigen::VectorXd::Ones(n) - x);

      double f_new;
      if (settings.step_rule == StepRule::fixed_1_over_L) {
        trial = (x - step * grad).cwiseMax(0.0).cwiseMin(1.0);
        f_new = detail::rwr_objective(inst, lambda, trial, res);
      } else {
        // halve until the quadratic upper bound at the trial point holds
        step = std::min(step * 2.0, 1.0);
        for (;;) {
          trial = (x - step * grad).cwiseMax(0.0).cwiseMin(1.0);
          f_new = detail::rwr_objective(inst, lambda, trial, res);
          const Eigen::VectorXd d = trial - x;
          if (f_new <= f + grad.dot(d) + 0.5 / step * d.squaredNorm() || step < 1e-16) break;
          step *= 0.5;
        }
      }
      const double move = (trial - x).norm();
      x = trial;
      f = f_new;
      if (move <= settings.tol) break;
    }
    if (f < best_f) {  // strict: ties keep the earlier restart
      best_f = f;
      best = x;
    }
  }
  return best;
}

// Binary greedy pursuit: repeatedly set to 1 the coordinate whose column best
// aligns with the residual. Selected coefficients stay at exactly 1.
inline Eigen::VectorXi solve_greedy(const Instance& inst, const GreedySettings& settings) {
  if (settings.k_max < 1) throw std::invalid_argument("solve_greedy: k_max must be >= 1");
  if (settings.k_max > inst.n) throw std::invalid_argument("solve_greedy: k_max must be <= n");
  if (settings.residual_tol < 0.0)
    throw std::invalid_argument("solve_greedy: residual_tol must be nonnegative");

  const int n = inst.n;
  Eigen::VectorXi x = Eigen::VectorXi::Zero(n);
  Eigen::VectorXd r = inst.y;
  std::vector<char> in_support(n, 0);
  int support_size = 0;

  while (r.norm() > settings.residual_tol && support_size < settings.k_max) {
    int best_j = -1;
    double best_corr = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (in_support[j]) continue;
      const double corr = inst.A.col(j).dot(r);
      if (corr > best_corr) {  // strict: ties resolve to the lowest index
        best_corr = corr;
        best_j = j;
      }
    }
    x[best_j] = 1;
    in_support[best_j] = 1;
    ++support_size;
    r = inst.y - inst.A * x.cast<double>();
  }
  return x;
}

}  // namespace bcs
