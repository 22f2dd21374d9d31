#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "semiglobal/errors.hpp"

namespace semiglobal {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Argument tuple of the residual map f. Argument order everywhere in this
// library is (y_next, y_cur, x_next, x_cur, z_next, z_cur).
struct EvalPoint {
  VectorXd y_next, y_cur, x_next, x_cur, z_next, z_cur;

  // Stacked length 2*(n_y + n_x + n_z), in argument order.
  VectorXd stacked() const;
  static EvalPoint from_stacked(const VectorXd& v, Index n_x, Index n_y, Index n_z);
};

// f_1..f_6: Jacobians of f with respect to each argument.
using JacobianSet = std::array<MatrixXd, 6>;

// Second derivatives of f. For each residual row r, `rows[r]` is the symmetric
// matrix of the quadratic form over the stacked argument vector; only the
// upper triangle is stored, the lower one is served through the adjoint view.
class HessianSet {
 public:
  HessianSet() = default;
  HessianSet(Index n_x, Index n_y, Index n_z);

  Index n_rows() const { return static_cast<Index>(rows_.size()); }
  Index stacked_dim() const { return dim_; }
  Index arg_offset(int arg) const { return offsets_[arg]; }
  Index arg_dim(int arg) const { return offsets_[arg + 1] - offsets_[arg]; }

  // Upper-triangle write access for pair (i, j), i <= j, arguments 0-based.
  void set_pair_block(Index row, int i, int j, const MatrixXd& block);

  // Block of mixed partials for pair (i, j), any order; symmetry is applied
  // structurally, so block(r, j, i) == block(r, i, j)^T by construction.
  MatrixXd pair_block(Index row, int i, int j) const;

  // Bilinear application f_{ij}(u, v) across all residual rows.
  VectorXd apply(int i, int j, const VectorXd& u, const VectorXd& v) const;

  // Full symmetric matrix of row r over the stacked argument vector.
  MatrixXd full(Index row) const { return rows_[row].selfadjointView<Eigen::Upper>(); }

 private:
  Index dim_ = 0;
  std::array<Index, 7> offsets_{};
  std::vector<MatrixXd> rows_;
};

struct SteadyState {
  VectorXd y;
  VectorXd x;
};

// A model is a residual map with an exogenous AR(1) block. Derivatives come
// from user-supplied closures when present, otherwise from central finite
// differences. Instances are immutable after construction and reentrant.
struct ModelSpec {
  std::string name;
  Index n_x = 0, n_y = 0, n_z = 0;
  MatrixXd Lambda;  // n_z x n_z, spectral radius < 1
  MatrixXd Omega;   // n_z x n_z, symmetric PSD innovation covariance
  double sigma = 0.0;

  std::function<VectorXd(const EvalPoint&)> residual;
  std::function<JacobianSet(const EvalPoint&)> analytic_jacobians;  // optional
  std::function<HessianSet(const EvalPoint&)> analytic_hessians;    // optional

  Index n_rows() const { return n_x + n_y; }

  // Throws SpecError on dimension/PSD/spectral-radius violations.
  void validate() const;
};

struct SteadyStateOptions {
  double tol = 1e-12;       // infinity norm of the residual
  int max_iter = 200;
  int max_halvings = 30;    // damped Newton step halving
};

VectorXd evaluate(const ModelSpec& model, const EvalPoint& p);

JacobianSet jacobians(const ModelSpec& model, const EvalPoint& p);

HessianSet hessians(const ModelSpec& model, const EvalPoint& p);

// Finite-difference variants, exposed so analytic providers can be checked
// against them regardless of what the model supplies.
JacobianSet fd_jacobians(const ModelSpec& model, const EvalPoint& p);
HessianSet fd_hessians(const ModelSpec& model, const EvalPoint& p);

// Damped Newton on g(y, x) = f(y, y, x, x, 0, 0). `guess` stacks (y, x).
SteadyState steady_state(const ModelSpec& model, const VectorXd& guess,
                         const SteadyStateOptions& opts = {});

EvalPoint steady_point(const ModelSpec& model, const SteadyState& ss);

}  // namespace semiglobal
