#pragma once

#include <Eigen/Dense>
#include <vector>

#include "semiglobal/model.hpp"

namespace semiglobal {

// Deterministic trajectory of the sigma = 0 skeleton. Rows are time indices
// t = 0..T+1; row T+1 carries the terminal values used by the solver.
struct DeterministicPath {
  Index T = 0;
  MatrixXd x;  // (T+2) x n_x
  MatrixXd y;  // (T+2) x n_y
  MatrixXd z;  // (T+2) x n_z
  SteadyState steady;

  EvalPoint point_at(Index t) const;  // arguments (t+1, t), valid for t <= T
};

struct PathOptions {
  Index T = 300;
  double tol_newton = 1e-10;    // infinity norm of the stacked residual
  double tol_terminal = 1e-8;   // |x_{T+1} - xbar| after the solve
  int max_iter = 50;
  int max_halvings = 30;
  VectorXd steady_guess;        // (y, x) seed for the steady state; empty = zeros
};

// z_t = Lambda^t z0 by iterated multiplication, t = 0..T.
MatrixXd propagate_exogenous(const MatrixXd& Lambda, const VectorXd& z0, Index T);

// Stacked-time Newton over {y_0..y_T, x_1..x_{T+1}} with y_{T+1} pinned to the
// steady state; the block-bidiagonal Jacobian is solved sparsely. The terminal
// x_{T+1} is determined by the last equation block and must land within
// tol_terminal of xbar, otherwise the horizon is too short.
DeterministicPath solve_path(const ModelSpec& model, const VectorXd& x0,
                             const VectorXd& z0, const PathOptions& opts = {});

// Infinity norm of the period residuals over t = 0..T. Pure diagnostic.
double path_residual(const ModelSpec& model, const DeterministicPath& path);

}  // namespace semiglobal
