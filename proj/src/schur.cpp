#include "semiglobal/schur.hpp"

#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace semiglobal {

double operator_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(m).singularValues().maxCoeff();
}

double inverse_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  double smin = Eigen::JacobiSVD<MatrixXd>(m).singularValues().minCoeff();
  if (smin <= 0.0) throw ConditioningError("inverse_norm: singular matrix");
  return 1.0 / smin;
}

MatrixXd SchurSplit::reconstruct() const {
  MatrixXd P = MatrixXd::Zero(Z.rows(), Z.cols());
  P.topLeftCorner(n_s(), n_s()) = A;
  P.bottomRightCorner(n_u(), n_u()) = B;
  return Z * P * Z_inv;
}

BkDiagnostic bk_check(const MatrixXd& L, Index n_unstable_required) {
  BkDiagnostic d;
  d.n_required_unstable = n_unstable_required;
  Eigen::EigenSolver<MatrixXd> es(L, false);
  for (Index i = 0; i < L.rows(); ++i) {
    std::complex<double> ev = es.eigenvalues()[i];
    d.eigenvalues.push_back(ev);
    if (std::abs(ev) < 1.0) ++d.n_stable;
    else ++d.n_unstable;
  }
  d.pass = (d.n_unstable == n_unstable_required);
  return d;
}

BkDiagnostic bk_check(const SchurSplit& split, Index n_unstable_required) {
  return bk_check(split.reconstruct(), n_unstable_required);
}

namespace {

lapack_logical select_stable(const double* re, const double* im) {
  return (*re) * (*re) + (*im) * (*im) < 1.0 ? 1 : 0;
}

// Quasi-triangular block partition of T: one entry per 1x1 or 2x2 block.
std::vector<Index> block_starts(const MatrixXd& T, double tol) {
  std::vector<Index> starts;
  Index k = 0;
  while (k < T.rows()) {
    starts.push_back(k);
    bool pair = (k + 1 < T.rows()) && std::abs(T(k + 1, k)) > tol;
    k += pair ? 2 : 1;
  }
  return starts;
}

// Balances each 2x2 complex-pair block so its spectral norm equals the
// eigenvalue modulus, then applies k^{block index} geometric damping of the
// inter-block coupling. Returned as the diagonal of the similarity.
VectorXd block_scaling(const MatrixXd& T, double k) {
  VectorXd d = VectorXd::Ones(T.rows());
  auto starts = block_starts(T, 1e-14);
  for (std::size_t b = 0; b < starts.size(); ++b) {
    Index at = starts[b];
    double base = std::pow(k, static_cast<double>(b));
    d[at] = base;
    bool pair = (b + 1 < starts.size()) ? (starts[b + 1] == at + 2) : (at + 2 == T.rows());
    if (pair) {
      double num = std::abs(T(at + 1, at));
      double den = std::abs(T(at, at + 1));
      double s = (num > 0.0 && den > 0.0) ? std::sqrt(std::sqrt(num * num / (den * den))) : 1.0;
      d[at + 1] = base * s;
    }
  }
  return d;
}

}  // namespace

SchurSplit block_schur(const MatrixXd& L, Index n_unstable, const SchurOptions& opts) {
  if (L.rows() != L.cols() || L.rows() == 0)
    throw SpecError("block_schur: L must be square and nonempty");
  const Index n = L.rows();
  const Index n_s = n - n_unstable;
  if (n_unstable < 0 || n_unstable > n)
    throw SpecError("block_schur: invalid unstable count");

  // Ordered real Schur form, stable eigenvalues first.
  MatrixXd T = L;  // column-major in-place
  MatrixXd Q(n, n);
  VectorXd wr(n), wi(n);
  lapack_int sdim = 0;
  lapack_int info = LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'S', select_stable,
                                  static_cast<lapack_int>(n), T.data(),
                                  static_cast<lapack_int>(n), &sdim, wr.data(),
                                  wi.data(), Q.data(), static_cast<lapack_int>(n));
  if (info != 0)
    throw ConditioningError("block_schur: dgees failed with info " + std::to_string(info));

  for (Index i = 0; i < n; ++i) {
    double mod = std::hypot(wr[i], wi[i]);
    if (std::abs(mod - 1.0) <= opts.unit_root_band) {
      std::ostringstream os;
      os << "block_schur: eigenvalue with modulus " << mod
         << " inside the unit-root guard band " << opts.unit_root_band;
      throw IndeterminacyError(os.str());
    }
  }
  if (sdim != n_s) {
    std::ostringstream os;
    os << "block_schur: " << (n - sdim) << " unstable eigenvalue(s), but "
       << n_unstable << " forward-looking variable(s) require exactly "
       << n_unstable << " (stable count " << sdim << ")";
    throw BlanchardKahnError(os.str());
  }

  // Annihilate the (1,2) coupling with the Sylvester solution of
  // T11 X - X T22 = -T12 on the quasi-triangular blocks.
  MatrixXd T11 = T.topLeftCorner(n_s, n_s);
  MatrixXd T22 = T.bottomRightCorner(n_unstable, n_unstable);
  MatrixXd X(n_s, n_unstable);
  if (n_s > 0 && n_unstable > 0) {
    MatrixXd C = -T.topRightCorner(n_s, n_unstable);
    double scale = 1.0;
    info = LAPACKE_dtrsyl(LAPACK_COL_MAJOR, 'N', 'N', -1,
                          static_cast<lapack_int>(n_s),
                          static_cast<lapack_int>(n_unstable), T11.data(),
                          static_cast<lapack_int>(n_s), T22.data(),
                          static_cast<lapack_int>(n_unstable), C.data(),
                          static_cast<lapack_int>(n_s), &scale);
    if (info < 0 || scale == 0.0)
      throw ConditioningError("block_schur: Sylvester solve failed (info " +
                              std::to_string(info) + ")");
    X = C / scale;
  } else {
    X.setZero();
  }

  double alpha = 0.0, beta = 0.0;
  for (Index i = 0; i < n; ++i) {
    double mod = std::hypot(wr[i], wi[i]);
    if (mod < 1.0) alpha = std::max(alpha, mod);
    else beta = std::max(beta, 1.0 / mod);
  }
  double gamma = opts.gamma > 0.0 ? opts.gamma : 0.5 * (1.0 - std::max(alpha, beta));
  if (gamma <= 0.0)
    throw ConditioningError("block_schur: no norm slack available (alpha or beta >= 1)");

  SchurSplit split;
  split.alpha = alpha;
  split.beta = beta;
  split.gamma = gamma;

  // Shrink the geometric damping base until the norm targets hold.
  for (double k = 1.0;; k *= 0.5) {
    VectorXd dA = n_s > 0 ? block_scaling(T11, k) : VectorXd();
    VectorXd dB = n_unstable > 0 ? block_scaling(T22, k) : VectorXd();
    MatrixXd A = n_s > 0
                     ? MatrixXd(dA.cwiseInverse().asDiagonal() * T11 * dA.asDiagonal())
                     : MatrixXd(0, 0);
    MatrixXd B = n_unstable > 0
                     ? MatrixXd(dB.cwiseInverse().asDiagonal() * T22 * dB.asDiagonal())
                     : MatrixXd(0, 0);
    double normA = operator_norm(A);
    double normBi = n_unstable > 0 ? inverse_norm(B) : 0.0;

    MatrixXd W = MatrixXd::Identity(n, n);
    if (n_s > 0 && n_unstable > 0) W.topRightCorner(n_s, n_unstable) = X;
    VectorXd d(n);
    if (n_s > 0) d.head(n_s) = dA;
    if (n_unstable > 0) d.tail(n_unstable) = dB;
    MatrixXd Z = Q * W * d.asDiagonal();
    MatrixXd W_inv = MatrixXd::Identity(n, n);
    if (n_s > 0 && n_unstable > 0) W_inv.topRightCorner(n_s, n_unstable) = -X;
    MatrixXd Z_inv = d.cwiseInverse().asDiagonal() * W_inv * Q.transpose();

    Eigen::JacobiSVD<MatrixXd> svd(Z);
    double cond = svd.singularValues().maxCoeff() / svd.singularValues().minCoeff();

    if (normA <= alpha + gamma && (n_unstable == 0 || normBi <= beta + gamma)) {
      if (cond > opts.max_cond_Z) {
        std::ostringstream os;
        os << "block_schur: similarity condition number " << cond << " exceeds "
           << opts.max_cond_Z << " while enforcing the norm bounds";
        throw ConditioningError(os.str());
      }
      split.A = std::move(A);
      split.B = std::move(B);
      split.Z = std::move(Z);
      split.Z_inv = std::move(Z_inv);
      split.cond_Z = cond;
      return split;
    }
    if (cond > opts.max_cond_Z) {
      std::ostringstream os;
      os << "block_schur: similarity condition number " << cond << " exceeds "
         << opts.max_cond_Z << " before reaching ||A|| <= " << alpha + gamma
         << ", ||B^-1|| <= " << beta + gamma;
      throw ConditioningError(os.str());
    }
  }
}

}  // namespace semiglobal
