#include "semiglobal/tvlre.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

namespace semiglobal {

MatrixXd steady_forward_map(const ModelSpec& model, const SteadyState& ss) {
  JacobianSet J = jacobians(model, steady_point(model, ss));
  MatrixXd Phi(model.n_rows(), model.n_rows());
  Phi.leftCols(model.n_x) = J[2];
  Phi.rightCols(model.n_y) = J[0];
  MatrixXd Lam(model.n_rows(), model.n_rows());
  Lam.leftCols(model.n_x) = -J[3];
  Lam.rightCols(model.n_y) = -J[1];
  Eigen::FullPivLU<MatrixXd> lu(Phi);
  if (!lu.isInvertible())
    throw SingularSystemError(
        "steady_forward_map: [f3, f1] is singular at the steady state; this "
        "system needs a generalized decomposition, which is out of scope");
  return lu.solve(Lam);
}

TVSystem build_tvsystem(const ModelSpec& model, const DeterministicPath& path,
                        const SchurSplit& split) {
  TVSystem sys;
  sys.T = path.T;
  sys.n_s = model.n_x;
  sys.n_u = model.n_y;
  sys.n_z = model.n_z;
  sys.split = split;
  sys.Lambda = model.Lambda;

  const MatrixXd L = steady_forward_map(model, path.steady);
  const Index nb = model.n_rows();
  const auto reserve = [&](std::vector<MatrixXd>& v) { v.reserve(sys.T + 1); };
  reserve(sys.A_t); reserve(sys.B_t);
  reserve(sys.Q11); reserve(sys.Q12); reserve(sys.Q21); reserve(sys.Q22);
  reserve(sys.Psi1); reserve(sys.Psi2);
  reserve(sys.Pi1); reserve(sys.Pi2);
  reserve(sys.impact1); reserve(sys.impact2);
  sys.M_norm.reserve(sys.T + 1);
  sys.phi_cond.reserve(sys.T + 1);

  for (Index t = 0; t <= sys.T; ++t) {
    JacobianSet J = jacobians(model, path.point_at(t));
    MatrixXd Phi(nb, nb);
    Phi.leftCols(model.n_x) = J[2];
    Phi.rightCols(model.n_y) = J[0];
    MatrixXd Lam(nb, nb);
    Lam.leftCols(model.n_x) = -J[3];
    Lam.rightCols(model.n_y) = -J[1];

    Eigen::JacobiSVD<MatrixXd> svd(Phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smin = svd.singularValues().minCoeff();
    double cond = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                             : std::numeric_limits<double>::infinity();
    sys.phi_cond.push_back(cond);
    sys.max_phi_cond = std::max(sys.max_phi_cond, cond);
    if (!std::isfinite(cond) || cond > 1e14)
      throw SingularSystemError("build_tvsystem: Phi_t is numerically singular at t = " +
                                std::to_string(t));

    Eigen::PartialPivLU<MatrixXd> lu(Phi);
    MatrixXd M = lu.solve(Lam) - L;
    sys.M_norm.push_back(operator_norm(M));

    MatrixXd Q = split.Z_inv * M * split.Z;
    sys.Q11.push_back(Q.topLeftCorner(sys.n_s, sys.n_s));
    sys.Q12.push_back(Q.topRightCorner(sys.n_s, sys.n_u));
    sys.Q21.push_back(Q.bottomLeftCorner(sys.n_u, sys.n_s));
    sys.Q22.push_back(Q.bottomRightCorner(sys.n_u, sys.n_u));
    sys.A_t.push_back(split.A + sys.Q11.back());
    sys.B_t.push_back(split.B + sys.Q22.back());

    // Forcing rows carry the sign of moving the residual system to the
    // forward form, so eta itself enters the recursions unmodified.
    MatrixXd Psi = -split.Z_inv * lu.inverse();
    sys.Psi1.push_back(Psi.topRows(sys.n_s));
    sys.Psi2.push_back(Psi.bottomRows(sys.n_u));
    MatrixXd Pi = Psi * (J[4] * model.Lambda + J[5]);
    sys.Pi1.push_back(Pi.topRows(sys.n_s));
    sys.Pi2.push_back(Pi.bottomRows(sys.n_u));
    MatrixXd Imp = Psi * J[4];
    sys.impact1.push_back(Imp.topRows(sys.n_s));
    sys.impact2.push_back(Imp.bottomRows(sys.n_u));
  }
  return sys;
}

NormBounds norm_bounds(const TVSystem& sys) {
  NormBounds nb;
  for (Index t = 0; t <= sys.T; ++t) {
    nb.a = std::max(nb.a, operator_norm(sys.A_t[t]));
    nb.b = std::max(nb.b, inverse_norm(sys.B_t[t]));
    nb.c = std::max(nb.c, operator_norm(sys.Q12[t]));
    nb.d = std::max(nb.d, operator_norm(sys.Q21[t]));
  }
  nb.a_limit = operator_norm(sys.split.A);
  nb.b_limit = sys.n_u > 0 ? inverse_norm(sys.split.B) : 0.0;
  return nb;
}

MajorantResult majorant_fixed_points(double a, double b, double c, double d,
                                     double tol, int max_iter) {
  double disc = (1.0 - b * a) * (1.0 - b * a) - 4.0 * b * b * c * d;
  if (disc < 0.0)
    throw DivergenceError(
        "majorant_fixed_points: (1 - a b)^2 - 4 b^2 c d < 0, no fixed points");
  MajorantResult res;
  double root = std::sqrt(disc);
  res.s1 = 2.0 * b * d / (1.0 - b * a + root);
  res.s2 = (b * c > 0.0) ? (1.0 - b * a + root) / (2.0 * b * c)
                         : std::numeric_limits<double>::infinity();
  double s = 0.0;
  res.iterates.push_back(s);
  for (int i = 0; i < max_iter; ++i) {
    double nxt = (b * d + b * a * s) / (1.0 - b * c * s);
    res.iterates.push_back(nxt);
    if (std::abs(nxt - s) < tol) {
      res.converged = true;
      break;
    }
    s = nxt;
  }
  return res;
}

SolvabilityReport solvability_check(const NormBounds& nb) {
  if (nb.a >= 1.0 || nb.b >= 1.0) {
    std::ostringstream os;
    os << "solvability_check: a = " << nb.a << ", b = " << nb.b
       << "; both must be below 1. Start the deterministic path closer to the "
          "steady state.";
    throw ConditioningError(os.str());
  }
  SolvabilityReport rep;
  rep.precondition_ok = true;
  rep.lhs = nb.c * nb.d;
  double r = (1.0 - nb.a * nb.b) / (2.0 * nb.b);
  rep.rhs = r * r;
  rep.pass = rep.lhs < rep.rhs;
  if (rep.pass) {
    MajorantResult m = majorant_fixed_points(nb.a, nb.b, nb.c, nb.d);
    rep.s1 = m.s1;
    rep.s2 = m.s2;
    rep.margin_lower_bound = 0.5 * (1.0 + nb.a * nb.b);
  }
  return rep;
}

RecursionTables backward_recursion(const TVSystem& sys, const ForcingSequence& forcing,
                                   const RecursionOptions& opts) {
  const Index T = opts.horizon.value_or(sys.T);
  if (T > sys.T)
    throw SpecError("backward_recursion: horizon exceeds the built system");
  if (!forcing.empty() && static_cast<Index>(forcing.size()) < T + 1)
    throw SpecError("backward_recursion: forcing sequence shorter than horizon");

  RecursionTables tab;
  tab.horizon = T;
  tab.K.assign(T + 2, MatrixXd::Zero(sys.n_u, sys.n_s));
  tab.L.assign(T + 1, MatrixXd());
  tab.g.assign(T + 2, VectorXd::Zero(sys.n_u));
  tab.R.assign(T + 2, MatrixXd::Zero(sys.n_u, sys.n_z));
  tab.step_margin.assign(T + 1, 0.0);
  if (opts.terminal_u.size() > 0) {
    if (opts.terminal_u.size() != sys.n_u)
      throw SpecError("backward_recursion: terminal_u has wrong dimension");
    tab.g[T + 1] = opts.terminal_u;
  }
  tab.tail_product = MatrixXd::Identity(sys.n_u, sys.n_u);

  for (Index t = T; t >= 0; --t) {
    const MatrixXd& Kn = tab.K[t + 1];
    MatrixXd Lt = sys.B_t[t] + Kn * sys.Q12[t];
    Eigen::JacobiSVD<MatrixXd> svd(Lt);
    double smin = svd.singularValues().minCoeff();
    double cond = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                             : std::numeric_limits<double>::infinity();
    tab.max_L_cond = std::max(tab.max_L_cond, cond);
    if (!std::isfinite(cond) || cond > opts.cond_limit)
      throw RecursionBreakdownError(
          "backward_recursion: step matrix condition " + std::to_string(cond) +
          " at t = " + std::to_string(t));
    Eigen::PartialPivLU<MatrixXd> lu(Lt);
    tab.K[t] = lu.solve(sys.Q21[t] + Kn * sys.A_t[t]);
    VectorXd h = forcing.empty() ? VectorXd::Zero(sys.n_s + sys.n_u)
                                 : forcing[t];
    tab.g[t] = lu.solve(tab.g[t + 1] - (sys.Psi2[t] + Kn * sys.Psi1[t]) * h);
    tab.R[t] = lu.solve(sys.Pi2[t] + Kn * sys.Pi1[t] + tab.R[t + 1] * sys.Lambda);
    tab.step_margin[t] =
        inverse_norm(sys.B_t[t]) * operator_norm(Kn) * operator_norm(sys.Q12[t]);
    tab.tail_product = lu.solve(tab.tail_product);
    tab.L[t] = std::move(Lt);
  }
  tab.tail_product_norm = operator_norm(tab.tail_product);
  return tab;
}

ConvergenceReport limit_convergence_test(const TVSystem& sys,
                                         const ForcingSequence& forcing,
                                         Index T1, Index T2) {
  if (!(T1 < T2)) throw SpecError("limit_convergence_test: need T1 < T2");
  const Index delta = T2 - T1;
  const Index T3 = T2 + delta;
  if (T3 > sys.T)
    throw SpecError("limit_convergence_test: system horizon too short for T2 + (T2 - T1)");
  RecursionOptions o1, o2, o3;
  o1.horizon = T1;
  o2.horizon = T2;
  o3.horizon = T3;
  RecursionTables t1 = backward_recursion(sys, forcing, o1);
  RecursionTables t2 = backward_recursion(sys, forcing, o2);
  RecursionTables t3 = backward_recursion(sys, forcing, o3);

  ConvergenceReport rep;
  for (Index j = 0; j <= T1; ++j)
    rep.diff_1 = std::max(rep.diff_1, operator_norm(t1.K[j] - t2.K[j]));
  for (Index j = 0; j <= T2; ++j)
    rep.diff_2 = std::max(rep.diff_2, operator_norm(t2.K[j] - t3.K[j]));
  rep.decays = rep.diff_2 < rep.diff_1;
  if (rep.diff_1 > 0.0 && rep.diff_2 > 0.0)
    rep.fitted_rate =
        std::pow(rep.diff_2 / rep.diff_1, 1.0 / static_cast<double>(delta));
  return rep;
}

OrderSolution solve_order(const TVSystem& sys, const RecursionTables& tables,
                          const ForcingSequence& forcing,
                          const std::optional<VectorXd>& s0_opt) {
  const Index T = tables.horizon;
  const SchurSplit& sp = sys.split;
  OrderSolution sol;

  if (s0_opt) {
    sol.s0 = *s0_opt;
    sol.u0 = -tables.K[0] * sol.s0 + tables.g[0];
  } else {
    // x_0 of this order vanishes, so s_0 = Zi12 y_0 and u_0 = Zi22 y_0.
    MatrixXd lhs = sp.Zi22() + tables.K[0] * sp.Zi12();
    Eigen::FullPivLU<MatrixXd> lu(lhs);
    if (!lu.isInvertible())
      throw IndeterminacyError(
          "solve_order: (Zi22 + K_0 Zi12) is singular; no determinate jump");
    sol.y0 = lu.solve(tables.g[0]);
    sol.s0 = sp.Zi12() * sol.y0;
    sol.u0 = -tables.K[0] * sol.s0 + tables.g[0];
  }

  sol.Es.resize(T + 1, sys.n_s);
  sol.Eu.resize(T + 1, sys.n_u);
  sol.Ex.resize(T + 1, sys.n_s);
  sol.Ey.resize(T + 1, sys.n_u);
  VectorXd s = sol.s0;
  for (Index t = 0; t <= T; ++t) {
    VectorXd u = -tables.K[t] * s + tables.g[t];
    sol.Es.row(t) = s;
    sol.Eu.row(t) = u;
    sol.Ex.row(t) = sp.Z11() * s + sp.Z12() * u;
    sol.Ey.row(t) = sp.Z21() * s + sp.Z22() * u;
    if (t < T) {
      VectorXd h = forcing.empty() ? VectorXd::Zero(sys.n_s + sys.n_u) : forcing[t];
      s = (sys.A_t[t] - sys.Q12[t] * tables.K[t]) * s + sys.Q12[t] * tables.g[t] +
          sys.Psi1[t] * h;
    }
  }
  if (sol.y0.size() == 0) sol.y0 = sol.Ey.row(0);
  return sol;
}

MatrixXd policy_in_levels(const SchurSplit& split, const MatrixXd& K_t) {
  MatrixXd num = split.Z21() - split.Z22() * K_t;
  MatrixXd den = split.Z11() - split.Z12() * K_t;
  Eigen::FullPivLU<MatrixXd> lu(den);
  if (!lu.isInvertible())
    throw ConditioningError("policy_in_levels: state recovery matrix is singular");
  MatrixXd den_inv = lu.inverse();
  return -num * den_inv;
}

MatrixXd exogenous_loading_in_levels(const SchurSplit& split, const MatrixXd& K_t,
                                     const MatrixXd& R_t) {
  MatrixXd Khat = policy_in_levels(split, K_t);
  return Khat * split.Z12() * R_t + split.Z22() * R_t;
}

}  // namespace semiglobal
