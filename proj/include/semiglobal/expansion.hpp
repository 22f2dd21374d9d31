#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "semiglobal/tvlre.hpp"

namespace semiglobal {

// Moving-average representation of the first-order solution: triangular
// tables of loadings on the innovations eps_i, i = 1..t.
struct MACoefficients {
  Index T_ma = 0;  // tables cover t = 1..T_ma
  Index n_s = 0, n_u = 0, n_z = 0;
  // [t-1][i-1] holds the loading at time t on eps_i.
  std::vector<std::vector<MatrixXd>> gamma;   // s_t
  std::vector<std::vector<MatrixXd>> delta;   // u_t = -K_t gamma - R_t Lambda^{t-i}
  std::vector<std::vector<MatrixXd>> rho_x;   // Z11 gamma + Z12 delta
  std::vector<std::vector<MatrixXd>> rho_y;   // Z21 gamma + Z22 delta
  std::vector<MatrixXd> lambda_pow;           // Lambda^k, k = 0..T_ma

  const MatrixXd& g_at(Index t, Index i) const { return gamma[t - 1][i - 1]; }
  const MatrixXd& x_at(Index t, Index i) const { return rho_x[t - 1][i - 1]; }
  const MatrixXd& y_at(Index t, Index i) const { return rho_y[t - 1][i - 1]; }
};

enum class Var { X, Y, Z };

// Second moments of the first-order processes, optionally conditioning on a
// deterministic date-1 innovation (the impulse-response case).
struct MomentContext {
  const MACoefficients* ma = nullptr;
  MatrixXd Omega;
  VectorXd eps1;  // empty: fully stochastic

  VectorXd mean(Var kind, Index t) const;
  // E[a_ta b_tb^T], means included when eps1 is set.
  MatrixXd second(Var a, Index ta, Var b, Index tb) const;
};

MACoefficients first_order_ma(const TVSystem& sys, const RecursionTables& tables);

// Expected quadratic forcing at date t + 1 from the first-order moments and
// the second derivatives evaluated on the deterministic path.
VectorXd eta2_forcing(const HessianSet& hess_t, const MomentContext& mom, Index t);

// Forcing sequence h[t] = E_0 eta^{(2)}_{t+1}, t = 0..T.
ForcingSequence eta2_sequence(const ModelSpec& model, const DeterministicPath& path,
                              const MomentContext& mom, Index T);

struct ExpansionDiagnostics {
  NormBounds bounds;
  bool precondition_ok = false;
  bool eq38_checked = false;
  bool eq38_pass = false;
  bool solvability_warning = false;  // proceeded on per-step invertibility only
  double s1 = 0.0;
  double s2 = 0.0;
  double margin_lower_bound = 0.0;
  double max_phi_cond = 0.0;
  double max_L_cond = 0.0;
  double cond_Z = 0.0;
  double tail_product_norm = 0.0;
  double max_step_margin = 0.0;
  double path_residual_norm = 0.0;
};

struct ExpansionSolution {
  int order = 0;
  double sigma = 0.0;
  DeterministicPath path0;
  MatrixXd Ex1, Ey1;  // expected first-order deviations (zero when z0^(1) = 0)
  MatrixXd Ex2, Ey2;  // expected second-order deviations
  VectorXd y0_order1, y0_order2;
  MatrixXd Ex_total, Ey_total;  // sum of sigma^n-weighted orders, rows 0..T
  ExpansionDiagnostics diag;
};

struct ExpansionOptions {
  PathOptions path;
  SchurOptions schur;
  double recursion_cond_limit = 1e12;
  VectorXd terminal_u;  // order-2 terminal condition; empty = zero
};

ExpansionSolution solve_expansion(const ModelSpec& model, const VectorXd& x0,
                                  const VectorXd& z0, double sigma, int order,
                                  const ExpansionOptions& opts = {});

// Expected dynamics conditional on a date-1 innovation `shock` (may be zero,
// which reduces to the unconditional expected path).
struct ImpulseResponse {
  MatrixXd x1, y1;  // first-order response, rows t = 0..T
  MatrixXd x2, y2;  // second-order conditional expectation
  MatrixXd x_total, y_total;
};

ImpulseResponse impulse_response(const ModelSpec& model, const VectorXd& x0,
                                 const VectorXd& z0, double sigma,
                                 const VectorXd& shock,
                                 const ExpansionOptions& opts = {});

// Grid of expansions over initial states; points are independent, so the
// parallel variant distributes them over OpenMP threads. Results are written
// into preassigned slots and do not depend on the thread count.
struct PolicyPoint {
  VectorXd x0;
  VectorXd y0_det;
  VectorXd y0_order2;
  bool eq38_pass = false;
  bool precondition_ok = false;
};

std::vector<PolicyPoint> solve_policy_grid(const ModelSpec& model,
                                           const std::vector<VectorXd>& x0s,
                                           const VectorXd& z0,
                                           const ExpansionOptions& opts,
                                           bool parallel);

// Monte-Carlo sample covariance of the first-order x_t at the requested
// times; chunked fixed-order accumulation keeps the result independent of
// the thread count.
std::vector<MatrixXd> mc_first_order_cov(const TVSystem& sys,
                                         const RecursionTables& tables,
                                         const MatrixXd& Omega,
                                         const std::vector<Index>& times,
                                         Index n_draws, std::uint64_t seed,
                                         bool parallel);

}  // namespace semiglobal
