#include "semiglobal/expansion.hpp"

#include <cmath>

#include "semiglobal/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace semiglobal {

namespace {

template <typename Fn>
auto staged(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (SolverError& e) {
    e.set_stage(stage);
    throw;
  }
}

}  // namespace

MACoefficients first_order_ma(const TVSystem& sys, const RecursionTables& tables) {
  MACoefficients ma;
  ma.T_ma = tables.horizon + 1;
  ma.n_s = sys.n_s;
  ma.n_u = sys.n_u;
  ma.n_z = sys.n_z;
  const SchurSplit& sp = sys.split;

  ma.lambda_pow.resize(ma.T_ma + 1);
  ma.lambda_pow[0] = MatrixXd::Identity(sys.n_z, sys.n_z);
  for (Index k = 1; k <= ma.T_ma; ++k)
    ma.lambda_pow[k] = ma.lambda_pow[k - 1] * sys.Lambda;

  ma.gamma.resize(ma.T_ma);
  ma.delta.resize(ma.T_ma);
  ma.rho_x.resize(ma.T_ma);
  ma.rho_y.resize(ma.T_ma);

  const MatrixXd Z11 = sp.Z11(), Z12 = sp.Z12(), Z21 = sp.Z21(), Z22 = sp.Z22();
  for (Index t = 1; t <= ma.T_ma; ++t) {
    auto& gam = ma.gamma[t - 1];
    gam.resize(t);
    gam[t - 1] = sys.impact1[t - 1];  // own-date innovation
    if (t >= 2) {
      const Index tm = t - 1;
      MatrixXd Atil = sys.A_t[tm] - sys.Q12[tm] * tables.K[tm];
      MatrixXd Ptil = sys.Pi1[tm] - sys.Q12[tm] * tables.R[tm];
      for (Index i = 1; i < t; ++i)
        gam[i - 1] = Atil * ma.gamma[t - 2][i - 1] + Ptil * ma.lambda_pow[t - 1 - i];
    }
    auto& del = ma.delta[t - 1];
    auto& rx = ma.rho_x[t - 1];
    auto& ry = ma.rho_y[t - 1];
    del.resize(t);
    rx.resize(t);
    ry.resize(t);
    for (Index i = 1; i <= t; ++i) {
      del[i - 1] = -tables.K[t] * gam[i - 1] - tables.R[t] * ma.lambda_pow[t - i];
      rx[i - 1] = Z11 * gam[i - 1] + Z12 * del[i - 1];
      ry[i - 1] = Z21 * gam[i - 1] + Z22 * del[i - 1];
    }
  }
  return ma;
}

VectorXd MomentContext::mean(Var kind, Index t) const {
  const Index n = kind == Var::X ? ma->n_s : (kind == Var::Y ? ma->n_u : ma->n_z);
  if (eps1.size() == 0 || t < 1) return VectorXd::Zero(n);
  switch (kind) {
    case Var::X: return ma->x_at(t, 1) * eps1;
    case Var::Y: return ma->y_at(t, 1) * eps1;
    case Var::Z: return ma->lambda_pow[t - 1] * eps1;
  }
  return VectorXd::Zero(n);
}

MatrixXd MomentContext::second(Var a, Index ta, Var b, Index tb) const {
  auto load = [&](Var kind, Index t, Index i) -> MatrixXd {
    switch (kind) {
      case Var::X: return ma->x_at(t, i);
      case Var::Y: return ma->y_at(t, i);
      case Var::Z: return ma->lambda_pow[t - i];
    }
    return {};
  };
  const Index na = a == Var::X ? ma->n_s : (a == Var::Y ? ma->n_u : ma->n_z);
  const Index nb = b == Var::X ? ma->n_s : (b == Var::Y ? ma->n_u : ma->n_z);
  MatrixXd out = MatrixXd::Zero(na, nb);
  const Index upto = std::min(ta, tb);
  const Index start = eps1.size() > 0 ? 2 : 1;  // date-1 draw pinned when set
  for (Index i = start; i <= upto; ++i)
    out += load(a, ta, i) * Omega * load(b, tb, i).transpose();
  if (eps1.size() > 0) out += mean(a, ta) * mean(b, tb).transpose();
  return out;
}

VectorXd eta2_forcing(const HessianSet& hess_t, const MomentContext& mom, Index t) {
  if (t + 1 > mom.ma->T_ma)
    throw HorizonError("eta2_forcing: moment at t = " + std::to_string(t + 1) +
                       " lies beyond the stored moving-average range");
  // Stacked argument order (y_next, y_cur, x_next, x_cur, z_next, z_cur).
  const std::array<std::pair<Var, Index>, 6> args = {
      std::pair{Var::Y, t + 1}, {Var::Y, t},     {Var::X, t + 1},
      {Var::X, t},              {Var::Z, t + 1}, {Var::Z, t}};
  const Index D = hess_t.stacked_dim();
  MatrixXd Evv = MatrixXd::Zero(D, D);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (args[i].second < 1 || args[j].second < 1) continue;  // date-0 terms vanish
      Evv.block(hess_t.arg_offset(i), hess_t.arg_offset(j), hess_t.arg_dim(i),
                hess_t.arg_dim(j)) =
          mom.second(args[i].first, args[i].second, args[j].first, args[j].second);
    }
  }
  VectorXd eta(hess_t.n_rows());
  for (Index r = 0; r < hess_t.n_rows(); ++r)
    eta[r] = 0.5 * hess_t.full(r).cwiseProduct(Evv).sum();
  return eta;
}

ForcingSequence eta2_sequence(const ModelSpec& model, const DeterministicPath& path,
                              const MomentContext& mom, Index T) {
  ForcingSequence h(T + 1);
  for (Index t = 0; t <= T; ++t)
    h[t] = eta2_forcing(hessians(model, path.point_at(t)), mom, t);
  return h;
}

namespace {

struct Pipeline {
  DeterministicPath path;
  SchurSplit split;
  TVSystem sys;
  NormBounds nb;
  ExpansionDiagnostics diag;
};

Pipeline run_common(const ModelSpec& model, const VectorXd& x0, const VectorXd& z0,
                    const ExpansionOptions& opts) {
  Pipeline p;
  p.path = staged("det-path", [&] { return solve_path(model, x0, z0, opts.path); });
  MatrixXd L = staged("transform",
                      [&] { return steady_forward_map(model, p.path.steady); });
  p.split = staged("schur", [&] { return block_schur(L, model.n_y, opts.schur); });
  p.sys = staged("tvsystem", [&] { return build_tvsystem(model, p.path, p.split); });
  p.nb = norm_bounds(p.sys);

  p.diag.bounds = p.nb;
  p.diag.precondition_ok = p.nb.a < 1.0 && p.nb.b < 1.0;
  if (p.diag.precondition_ok) {
    SolvabilityReport rep = solvability_check(p.nb);
    p.diag.eq38_checked = true;
    p.diag.eq38_pass = rep.pass;
    p.diag.s1 = rep.s1;
    p.diag.s2 = rep.s2;
    p.diag.margin_lower_bound = rep.margin_lower_bound;
    p.diag.solvability_warning = !rep.pass;
  } else {
    // Sufficient condition unavailable; proceed on per-step invertibility alone.
    p.diag.solvability_warning = true;
  }
  p.diag.max_phi_cond = p.sys.max_phi_cond;
  p.diag.cond_Z = p.split.cond_Z;
  p.diag.path_residual_norm = path_residual(model, p.path);
  return p;
}

}  // namespace

ExpansionSolution solve_expansion(const ModelSpec& model, const VectorXd& x0,
                                  const VectorXd& z0, double sigma, int order,
                                  const ExpansionOptions& opts) {
  if (order < 0 || order > 2)
    throw SpecError("solve_expansion: order must be 0, 1 or 2");
  model.validate();

  ExpansionSolution sol;
  sol.order = order;
  sol.sigma = sigma;

  Pipeline p = run_common(model, x0, z0, opts);
  sol.path0 = p.path;
  sol.diag = p.diag;
  const Index T = p.sys.T;
  const Index n_x = model.n_x, n_y = model.n_y;

  sol.Ex1 = MatrixXd::Zero(T + 1, n_x);
  sol.Ey1 = MatrixXd::Zero(T + 1, n_y);
  sol.Ex2 = MatrixXd::Zero(T + 1, n_x);
  sol.Ey2 = MatrixXd::Zero(T + 1, n_y);
  sol.y0_order1 = VectorXd::Zero(n_y);
  sol.y0_order2 = VectorXd::Zero(n_y);

  if (order >= 1) {
    RecursionOptions ro;
    ro.cond_limit = opts.recursion_cond_limit;
    // z_0^(1) = 0, so the expected first-order forcing vanishes identically.
    RecursionTables tab1 = staged("order-1", [&] {
      return backward_recursion(p.sys, {}, ro);
    });
    OrderSolution o1 = staged("order-1", [&] {
      return solve_order(p.sys, tab1, {});
    });
    sol.Ex1 = o1.Ex;
    sol.Ey1 = o1.Ey;
    sol.y0_order1 = o1.y0;
    sol.diag.max_L_cond = tab1.max_L_cond;
    sol.diag.tail_product_norm = tab1.tail_product_norm;
    for (double m : tab1.step_margin)
      sol.diag.max_step_margin = std::max(sol.diag.max_step_margin, m);

    if (order >= 2) {
      MACoefficients ma = staged("order-2", [&] { return first_order_ma(p.sys, tab1); });
      MomentContext mom{&ma, model.Omega, VectorXd()};
      ForcingSequence h = staged("order-2", [&] {
        return eta2_sequence(model, p.path, mom, T);
      });
      RecursionOptions ro2 = ro;
      ro2.terminal_u = opts.terminal_u;
      RecursionTables tab2 = staged("order-2", [&] {
        return backward_recursion(p.sys, h, ro2);
      });
      OrderSolution o2 = staged("order-2", [&] { return solve_order(p.sys, tab2, h); });
      sol.Ex2 = o2.Ex;
      sol.Ey2 = o2.Ey;
      sol.y0_order2 = o2.y0;
    }
  }

  if (sigma == 0.0) {
    sol.Ex_total = p.path.x.topRows(T + 1);
    sol.Ey_total = p.path.y.topRows(T + 1);
  } else {
    sol.Ex_total = p.path.x.topRows(T + 1) + sigma * sol.Ex1 + sigma * sigma * sol.Ex2;
    sol.Ey_total = p.path.y.topRows(T + 1) + sigma * sol.Ey1 + sigma * sigma * sol.Ey2;
  }
  return sol;
}

ImpulseResponse impulse_response(const ModelSpec& model, const VectorXd& x0,
                                 const VectorXd& z0, double sigma,
                                 const VectorXd& shock,
                                 const ExpansionOptions& opts) {
  if (shock.size() != model.n_z)
    throw SpecError("impulse_response: shock dimension must be n_z");
  model.validate();

  Pipeline p = run_common(model, x0, z0, opts);
  const Index T = p.sys.T;
  RecursionOptions ro;
  ro.cond_limit = opts.recursion_cond_limit;
  RecursionTables tab1 = backward_recursion(p.sys, {}, ro);
  MACoefficients ma = first_order_ma(p.sys, tab1);

  ImpulseResponse irf;
  irf.x1 = MatrixXd::Zero(T + 1, model.n_x);
  irf.y1 = MatrixXd::Zero(T + 1, model.n_y);
  const bool live = shock.cwiseAbs().maxCoeff() > 0.0;
  if (live) {
    for (Index t = 1; t <= T; ++t) {
      irf.x1.row(t) = ma.x_at(t, 1) * shock;
      irf.y1.row(t) = ma.y_at(t, 1) * shock;
    }
  }

  MomentContext mom{&ma, model.Omega, live ? shock : VectorXd()};
  ForcingSequence h = eta2_sequence(model, p.path, mom, T);
  RecursionOptions ro2 = ro;
  ro2.terminal_u = opts.terminal_u;
  RecursionTables tab2 = backward_recursion(p.sys, h, ro2);
  OrderSolution o2 = solve_order(p.sys, tab2, h);
  irf.x2 = o2.Ex;
  irf.y2 = o2.Ey;

  irf.x_total = p.path.x.topRows(T + 1) + sigma * irf.x1 + sigma * sigma * irf.x2;
  irf.y_total = p.path.y.topRows(T + 1) + sigma * irf.y1 + sigma * sigma * irf.y2;
  return irf;
}

std::vector<PolicyPoint> solve_policy_grid(const ModelSpec& model,
                                           const std::vector<VectorXd>& x0s,
                                           const VectorXd& z0,
                                           const ExpansionOptions& opts,
                                           bool parallel) {
  const auto n = static_cast<Index>(x0s.size());
  std::vector<PolicyPoint> out(n);
  std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (Index i = 0; i < n; ++i) {
    try {
      ExpansionSolution s = solve_expansion(model, x0s[i], z0, model.sigma, 2, opts);
      PolicyPoint& pt = out[i];
      pt.x0 = x0s[i];
      pt.y0_det = s.path0.y.row(0);
      pt.y0_order2 = s.y0_order2;
      pt.eq38_pass = s.diag.eq38_pass;
      pt.precondition_ok = s.diag.precondition_ok;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (Index i = 0; i < n; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);
  return out;
}

std::vector<MatrixXd> mc_first_order_cov(const TVSystem& sys,
                                         const RecursionTables& tables,
                                         const MatrixXd& Omega,
                                         const std::vector<Index>& times,
                                         Index n_draws, std::uint64_t seed,
                                         bool parallel) {
  Index t_max = 0;
  for (Index t : times) t_max = std::max(t_max, t);
  if (t_max > tables.horizon)
    throw SpecError("mc_first_order_cov: requested time beyond the horizon");

  Eigen::LLT<MatrixXd> llt(Omega + 1e-15 * MatrixXd::Identity(sys.n_z, sys.n_z));
  if (llt.info() != Eigen::Success)
    throw SpecError("mc_first_order_cov: Omega has no Cholesky factor");
  const MatrixXd omega_chol = llt.matrixL();

  const SchurSplit& sp = sys.split;
  const MatrixXd Z11 = sp.Z11(), Z12 = sp.Z12();
  std::vector<MatrixXd> Atil(t_max), Ptil(t_max);
  for (Index t = 0; t < t_max; ++t) {
    Atil[t] = sys.A_t[t] - sys.Q12[t] * tables.K[t];
    Ptil[t] = sys.Pi1[t] - sys.Q12[t] * tables.R[t];
  }

  const Index chunk = 1024;
  const Index n_chunks = (n_draws + chunk - 1) / chunk;
  std::vector<std::vector<MatrixXd>> partial(
      n_chunks, std::vector<MatrixXd>(times.size(),
                                      MatrixXd::Zero(sys.n_s, sys.n_s)));

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (Index c = 0; c < n_chunks; ++c) {
    const Index lo = c * chunk;
    const Index hi = std::min(n_draws, lo + chunk);
    auto& acc = partial[c];
    for (Index d = lo; d < hi; ++d) {
      SplitMix64 rng = SplitMix64::substream(seed, static_cast<std::uint64_t>(d));
      VectorXd s = VectorXd::Zero(sys.n_s);
      VectorXd z = VectorXd::Zero(sys.n_z);
      for (Index t = 0; t <= t_max; ++t) {
        for (std::size_t w = 0; w < times.size(); ++w) {
          if (times[w] != t) continue;
          VectorXd u = -tables.K[t] * s - tables.R[t] * z;
          VectorXd x = Z11 * s + Z12 * u;
          acc[w] += x * x.transpose();
        }
        if (t == t_max) break;
        VectorXd eps(sys.n_z);
        for (Index k = 0; k < sys.n_z; ++k) eps[k] = rng.next_normal();
        eps = omega_chol * eps;
        s = Atil[t] * s + Ptil[t] * z + sys.impact1[t] * eps;
        z = sys.Lambda * z + eps;
      }
    }
  }
  std::vector<MatrixXd> cov(times.size(), MatrixXd::Zero(sys.n_s, sys.n_s));
  for (Index c = 0; c < n_chunks; ++c)
    for (std::size_t w = 0; w < times.size(); ++w) cov[w] += partial[c][w];
  for (auto& m : cov) m /= static_cast<double>(n_draws);
  return cov;
}

}  // namespace semiglobal
