#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "semiglobal/path.hpp"
#include "semiglobal/schur.hpp"

namespace semiglobal {

// Linear rational-expectations system with deterministic time-varying
// coefficients in the split coordinates [s; u] = Z^{-1} [x; y]:
//
//   E_t s_{t+1} = A_t s_t + Q12_t u_t + Psi1_t E_t eta_{t+1}
//   E_t u_{t+1} = B_t u_t + Q21_t s_t + Psi2_t E_t eta_{t+1}
//
// Index t tags the equation linking periods t and t+1; its coefficients are
// evaluated at the deterministic path points (t+1, t). The sign conventions
// of the original residual system are absorbed into Psi and Pi.
struct TVSystem {
  Index T = 0;
  Index n_s = 0, n_u = 0, n_z = 0;
  SchurSplit split;
  MatrixXd Lambda;

  std::vector<MatrixXd> A_t, B_t;              // A + Q11_t, B + Q22_t
  std::vector<MatrixXd> Q11, Q12, Q21, Q22;
  std::vector<MatrixXd> Psi1, Psi2;            // rows of -Z^{-1} Phi_t^{-1}
  std::vector<MatrixXd> Pi1, Pi2;              // Psi * (f5_t Lambda + f6_t)
  std::vector<MatrixXd> impact1, impact2;      // Psi * f5_t: loading of eps_{t+1}

  std::vector<double> M_norm;                  // ||Phi_t^{-1} Lambda_t - L||
  std::vector<double> phi_cond;
  double max_phi_cond = 0.0;
};

// Suprema over t of the operator norms entering the solvability test.
struct NormBounds {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  double a_limit = 0.0;  // ||A||, the t -> infinity limit of ||A_t||
  double b_limit = 0.0;  // ||B^{-1}||
};

struct SolvabilityReport {
  bool precondition_ok = false;  // a < 1 and b < 1
  bool pass = false;             // c d < ((1 - a b) / (2 b))^2
  double lhs = 0.0;              // c d
  double rhs = 0.0;
  double s1 = 0.0, s2 = 0.0;     // fixed points of the majorant recursion
  double margin_lower_bound = 0.0;  // (1 + a b) / 2 <= per-step margin
};

struct MajorantResult {
  double s1 = 0.0, s2 = 0.0;
  std::vector<double> iterates;  // from s_0 = 0
  bool converged = false;
};

// Backward-recursion tables, indexed by calendar time with the horizon as
// metadata. K[t] maps s_t to u_t; L[t] = B_t + K[t+1] Q12_t pairs the step
// t with the already-computed K one period ahead.
struct RecursionTables {
  Index horizon = 0;
  std::vector<MatrixXd> K;          // t = 0..horizon+1, K[horizon+1] = 0
  std::vector<MatrixXd> L;          // t = 0..horizon
  std::vector<VectorXd> g;          // t = 0..horizon+1, terminal term folded in
  std::vector<MatrixXd> R;          // first-order exogenous loading, 0..horizon+1
  std::vector<double> step_margin;  // ||B_t^{-1}|| ||K_{t+1}|| ||Q12_t||
  MatrixXd tail_product;            // prod_{k=0..horizon} L_k^{-1}
  double tail_product_norm = 0.0;
  double max_L_cond = 0.0;
};

struct ConvergenceReport {
  double diff_1 = 0.0;       // max_j ||K_{T1,j} - K_{T2,j}||
  double diff_2 = 0.0;       // max_j ||K_{T2,j} - K_{T3,j}||, T3 = T2 + (T2 - T1)
  double fitted_rate = 0.0;  // (diff_2 / diff_1)^(1 / (T2 - T1))
  bool decays = false;
};

struct OrderSolution {
  VectorXd y0;   // initial jump of the non-state variables
  VectorXd u0;
  VectorXd s0;
  MatrixXd Es, Eu;  // expected split paths, rows t = 0..T
  MatrixXd Ex, Ey;  // recovered original variables
};

struct RecursionOptions {
  double cond_limit = 1e12;              // L_t inversion guard
  std::optional<Index> horizon;          // truncate below sys.T if set
  VectorXd terminal_u;                   // E_T u_{T+1}; empty means zero
};

using ForcingSequence = std::vector<VectorXd>;  // h[t] = E_0 eta_{t+1}, t = 0..T

// Forward map L = [f3, f1]^{-1} (-[f4, f2]) at the steady state; the constant
// part the time-varying coefficients perturb around.
MatrixXd steady_forward_map(const ModelSpec& model, const SteadyState& ss);

TVSystem build_tvsystem(const ModelSpec& model, const DeterministicPath& path,
                        const SchurSplit& split);

NormBounds norm_bounds(const TVSystem& sys);

// Throws ConditioningError when the a < 1, b < 1 precondition fails; the
// expansion driver downgrades a failed test to a warning when every L_t
// stays well conditioned.
SolvabilityReport solvability_check(const NormBounds& nb);

MajorantResult majorant_fixed_points(double a, double b, double c, double d,
                                     double tol = 1e-14, int max_iter = 100000);

RecursionTables backward_recursion(const TVSystem& sys, const ForcingSequence& forcing,
                                   const RecursionOptions& opts = {});

ConvergenceReport limit_convergence_test(const TVSystem& sys,
                                         const ForcingSequence& forcing,
                                         Index T1, Index T2);

// Initial jump and expected dynamics. With `s0` unset the initial state of
// the order problem is zero and y0 solves (Zi22 + K_0 Zi12) y0 = g_0.
OrderSolution solve_order(const TVSystem& sys, const RecursionTables& tables,
                          const ForcingSequence& forcing,
                          const std::optional<VectorXd>& s0 = std::nullopt);

// Policy map in the original coordinates: y_t = -Khat_t x_t - Rhat_t z_t.
MatrixXd policy_in_levels(const SchurSplit& split, const MatrixXd& K_t);
MatrixXd exogenous_loading_in_levels(const SchurSplit& split, const MatrixXd& K_t,
                                     const MatrixXd& R_t);

}  // namespace semiglobal
