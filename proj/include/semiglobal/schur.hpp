#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "semiglobal/errors.hpp"

namespace semiglobal {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Block-diagonalizing similarity L = Z diag(A, B) Z^{-1} with A holding the
// stable spectrum (|lambda| < 1) and B the unstable one, both kept in real
// quasi-triangular form. The diagonal rescaling folded into Z enforces
// ||A|| <= alpha + gamma and ||B^{-1}|| <= beta + gamma.
struct SchurSplit {
  MatrixXd Z;
  MatrixXd Z_inv;
  MatrixXd A;  // n_s x n_s stable block
  MatrixXd B;  // n_u x n_u unstable block
  double alpha = 0.0;   // spectral radius of A
  double beta = 0.0;    // spectral radius of B^{-1}
  double gamma = 0.0;   // norm slack actually achieved
  double cond_Z = 1.0;

  Index n_s() const { return A.rows(); }
  Index n_u() const { return B.rows(); }

  MatrixXd Z11() const { return Z.topLeftCorner(n_s(), n_s()); }
  MatrixXd Z12() const { return Z.topRightCorner(n_s(), n_u()); }
  MatrixXd Z21() const { return Z.bottomLeftCorner(n_u(), n_s()); }
  MatrixXd Z22() const { return Z.bottomRightCorner(n_u(), n_u()); }
  MatrixXd Zi11() const { return Z_inv.topLeftCorner(n_s(), n_s()); }
  MatrixXd Zi12() const { return Z_inv.topRightCorner(n_s(), n_u()); }
  MatrixXd Zi21() const { return Z_inv.bottomLeftCorner(n_u(), n_s()); }
  MatrixXd Zi22() const { return Z_inv.bottomRightCorner(n_u(), n_u()); }

  MatrixXd reconstruct() const;  // Z diag(A, B) Z^{-1}
};

struct BkDiagnostic {
  Index n_stable = 0;
  Index n_unstable = 0;
  Index n_required_unstable = 0;
  bool pass = false;
  std::vector<std::complex<double>> eigenvalues;
};

struct SchurOptions {
  double gamma = -1.0;            // <= 0 picks (1 - max(alpha, beta)) / 2
  double unit_root_band = 1e-10;  // guard around |lambda| = 1
  double max_cond_Z = 1e8;
};

// Counts stable/unstable eigenvalues of L against the required number of
// unstable directions. Pure report; block_schur raises the hard failure.
BkDiagnostic bk_check(const MatrixXd& L, Index n_unstable_required);
BkDiagnostic bk_check(const SchurSplit& split, Index n_unstable_required);

// Ordered real Schur factorization, Sylvester annihilation of the coupling
// block, and norm-controlling diagonal rescaling.
SchurSplit block_schur(const MatrixXd& L, Index n_unstable,
                       const SchurOptions& opts = {});

// Spectral norm (largest singular value), exact at these sizes.
double operator_norm(const MatrixXd& m);

// ||M^{-1}|| as the reciprocal smallest singular value.
double inverse_norm(const MatrixXd& m);

}  // namespace semiglobal
