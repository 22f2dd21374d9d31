#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "semiglobal/expansion.hpp"
#include "semiglobal/rng.hpp"

using namespace semiglobal;
using testutil::rel_err;

namespace {

burnside::Params bench;

struct Built {
  ModelSpec model;
  DeterministicPath path;
  SchurSplit split;
  TVSystem sys;
  RecursionTables tab;
  MACoefficients ma;
};

Built build(double x0, Index T = 300, double tol_terminal = 1e-8) {
  Built b{burnside::make_model(bench), {}, {}, {}, {}, {}};
  PathOptions po;
  po.T = T;
  po.tol_terminal = tol_terminal;
  b.path = solve_path(b.model, VectorXd::Constant(1, x0), VectorXd::Zero(1), po);
  b.split = block_schur(steady_forward_map(b.model, b.path.steady), b.model.n_y);
  b.sys = build_tvsystem(b.model, b.path, b.split);
  b.tab = backward_recursion(b.sys, {});
  b.ma = first_order_ma(b.sys, b.tab);
  return b;
}

}  // namespace

TEST_CASE("first_order_ma: impact loading starts the recursion") {
  Built b = build(bench.xbar + 3 * bench.sigma_x(), 200);
  CHECK((b.ma.g_at(1, 1) - b.sys.impact1[0]).norm() == 0.0);
}

TEST_CASE("first_order_ma: burnside loadings are autoregressive powers") {
  double x0 = bench.xbar + 5 * bench.sigma_x();
  Built b = build(x0, 200);
  for (Index t = 1; t <= 6; ++t)
    for (Index i = 1; i <= t; ++i)
      CHECK(rel_err(b.ma.x_at(t, i)(0, 0),
                    std::pow(bench.rho, double(t - i))) < 1e-9);
  // y-loadings follow the policy slope.
  for (Index t = 1; t <= 6; ++t) {
    double khat = burnside::k_inf(bench, x0, t);
    for (Index i = 1; i <= t; ++i)
      CHECK(rel_err(b.ma.y_at(t, i)(0, 0),
                    -khat * std::pow(bench.rho, double(t - i))) < 1e-7);
  }
}

TEST_CASE("first_order_ma: second moments match the innovation-sum formula") {
  Built b = build(bench.xbar + 5 * bench.sigma_x(), 200);
  MomentContext mom{&b.ma, b.model.Omega, VectorXd()};
  double varfac = 1.0 / (1.0 - bench.rho * bench.rho);
  CHECK(rel_err(mom.second(Var::X, 1, Var::X, 1)(0, 0), 1.0) < 1e-10);
  CHECK(rel_err(mom.second(Var::X, 2, Var::X, 2)(0, 0), 1.81) < 1e-10);
  for (Index t : {Index(5), Index(12), Index(40)}) {
    double want = (1.0 - std::pow(bench.rho, 2.0 * double(t))) * varfac;
    CHECK(rel_err(mom.second(Var::X, t, Var::X, t)(0, 0), want) < 1e-9);
  }
}

TEST_CASE("first_order_ma: monte-carlo covariance within three standard errors") {
  Built b = build(bench.xbar + 5 * bench.sigma_x(), 60, 1e-2);
  const Index N = 100000;
  std::vector<Index> times = {5, 20};
  auto cov = mc_first_order_cov(b.sys, b.tab, b.model.Omega, times, N, 20240817, false);
  MomentContext mom{&b.ma, b.model.Omega, VectorXd()};
  for (std::size_t w = 0; w < times.size(); ++w) {
    double want = mom.second(Var::X, times[w], Var::X, times[w])(0, 0);
    double se = want * std::sqrt(2.0 / double(N));
    CHECK(std::abs(cov[w](0, 0) - want) < 3.0 * se);
  }
}

TEST_CASE("eta2_forcing: linear model contributes nothing") {
  MatrixXd L = (MatrixXd(2, 2) << 0.6, 0.2, 0.3, 1.4).finished();
  ModelSpec m = testutil::linear_forward_model(L, 1, MatrixXd::Constant(1, 1, 0.5),
                                               (MatrixXd(2, 1) << 1.0, 0.0).finished());
  PathOptions po;
  po.T = 120;
  DeterministicPath path = solve_path(m, VectorXd::Zero(1), VectorXd::Zero(1), po);
  SchurSplit split = block_schur(steady_forward_map(m, path.steady), 1);
  TVSystem sys = build_tvsystem(m, path, split);
  RecursionTables tab = backward_recursion(sys, {});
  MACoefficients ma = first_order_ma(sys, tab);
  MomentContext mom{&ma, m.Omega, VectorXd()};
  for (Index t : {Index(0), Index(5), Index(60)}) {
    VectorXd h = eta2_forcing(hessians(m, path.point_at(t)), mom, t);
    CHECK(h.lpNorm<Eigen::Infinity>() < 1e-7);  // finite-difference zeros
  }
}

TEST_CASE("eta2_forcing: burnside reduces to the two surviving contractions") {
  double x0 = bench.xbar + 4 * bench.sigma_x();
  Built b = build(x0, 200);
  MomentContext mom{&b.ma, b.model.Omega, VectorXd()};
  for (Index t : {Index(0), Index(3), Index(15)}) {
    VectorXd h = eta2_forcing(hessians(b.model, b.path.point_at(t)), mom, t);
    CHECK(std::abs(h[0]) < 1e-14);  // the state-transition row is linear
    // Independent assembly: the only second derivatives are in (y', x') and
    // (x', x'), and E[y' x'] = -K E[x' x'] along the first-order solution.
    double e = bench.beta * std::exp(bench.theta * b.path.x(t + 1, 0));
    double exx = (1.0 - std::pow(bench.rho, 2.0 * double(t + 1))) /
                 (1.0 - bench.rho * bench.rho);
    double khat = burnside::k_inf(bench, x0, t + 1);
    double want = -e * bench.theta *
                  (0.5 * bench.theta * (1.0 + b.path.y(t + 1, 0)) - khat) * exx;
    CHECK(rel_err(h[1], want) < 1e-7);
  }
}

TEST_CASE("eta2_forcing: monte-carlo average of the quadratic form") {
  double x0 = bench.xbar + 3 * bench.sigma_x();
  Built b = build(x0, 60, 1e-2);
  MomentContext mom{&b.ma, b.model.Omega, VectorXd()};
  const Index t = 5;
  HessianSet H = hessians(b.model, b.path.point_at(t));
  VectorXd want = eta2_forcing(H, mom, t);

  // Simulate first-order paths and average 0.5 v'Hv directly.
  const Index N = 100000;
  const MatrixXd Z11 = b.split.Z11(), Z12 = b.split.Z12();
  const MatrixXd Z21 = b.split.Z21(), Z22 = b.split.Z22();
  double acc = 0.0, acc2 = 0.0;
  for (Index d = 0; d < N; ++d) {
    SplitMix64 rng = SplitMix64::substream(99, static_cast<std::uint64_t>(d));
    VectorXd s = VectorXd::Zero(1), z = VectorXd::Zero(1);
    VectorXd xs(t + 2), ys(t + 2), zs(t + 2);
    xs[0] = ys[0] = zs[0] = 0.0;
    for (Index k = 0; k <= t; ++k) {
      VectorXd eps = VectorXd::Constant(1, rng.next_normal());
      MatrixXd Atil = b.sys.A_t[k] - b.sys.Q12[k] * b.tab.K[k];
      MatrixXd Ptil = b.sys.Pi1[k] - b.sys.Q12[k] * b.tab.R[k];
      s = Atil * s + Ptil * z + b.sys.impact1[k] * eps;
      z = b.sys.Lambda * z + eps;
      VectorXd u = -b.tab.K[k + 1] * s - b.tab.R[k + 1] * z;
      xs[k + 1] = (Z11 * s + Z12 * u)[0];
      ys[k + 1] = (Z21 * s + Z22 * u)[0];
      zs[k + 1] = z[0];
    }
    VectorXd v(6);
    v << ys[t + 1], ys[t], xs[t + 1], xs[t], zs[t + 1], zs[t];
    double q = 0.5 * v.dot(H.full(1) * v);
    acc += q;
    acc2 += q * q;
  }
  double mean = acc / double(N);
  double sd = std::sqrt((acc2 / double(N) - mean * mean) / double(N));
  CHECK(std::abs(mean - want[1]) < 3.0 * sd);
}

TEST_CASE("eta2_forcing: horizon shortfall raises an error") {
  Built b = build(bench.xbar + bench.sigma_x(), 40, 1e-2);
  MomentContext mom{&b.ma, b.model.Omega, VectorXd()};
  CHECK_THROWS_AS(
      eta2_forcing(hessians(b.model, b.path.point_at(2)), mom, b.ma.T_ma),
      HorizonError);
}

TEST_CASE("solve_expansion: sigma = 0 reproduces the deterministic path exactly") {
  ModelSpec m = burnside::make_model(bench);
  double x0 = bench.xbar + 2 * bench.sigma_x();
  ExpansionSolution sol = solve_expansion(m, VectorXd::Constant(1, x0),
                                          VectorXd::Zero(1), 0.0, 2);
  CHECK((sol.Ey_total.array() == sol.path0.y.topRows(sol.path0.T + 1).array()).all());
  CHECK((sol.Ex_total.array() == sol.path0.x.topRows(sol.path0.T + 1).array()).all());
  CHECK(sol.y0_order2[0] != 0.0);  // the coefficient itself is sigma-free
}

TEST_CASE("solve_expansion: order-1 expectations vanish with z0 = 0") {
  ModelSpec m = burnside::make_model(bench);
  ExpansionSolution sol =
      solve_expansion(m, VectorXd::Constant(1, bench.xbar + 3 * bench.sigma_x()),
                      VectorXd::Zero(1), bench.sigma, 2);
  CHECK(sol.y0_order1.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(sol.Ey1.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(sol.Ex1.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("solve_expansion: doubling sigma exactly quadruples the correction") {
  ModelSpec m = burnside::make_model(bench);
  VectorXd x0 = VectorXd::Constant(1, bench.xbar + 2 * bench.sigma_x());
  ExpansionSolution a = solve_expansion(m, x0, VectorXd::Zero(1), bench.sigma, 2);
  ExpansionSolution b = solve_expansion(m, x0, VectorXd::Zero(1), 2.0 * bench.sigma, 2);
  CHECK(a.y0_order2[0] == b.y0_order2[0]);
  double corr_a = a.sigma * a.sigma * a.y0_order2[0];
  double corr_b = b.sigma * b.sigma * b.y0_order2[0];
  CHECK(corr_b == 4.0 * corr_a);
}

TEST_CASE("solve_expansion: generic order-2 matches the closed form on the full grid") {
  ModelSpec m = burnside::make_model(bench);
  std::vector<VectorXd> x0s;
  for (double x : burnside::default_grid(bench, 41, 5.0))
    x0s.push_back(VectorXd::Constant(1, x));
  ExpansionOptions opts;
  auto pts = solve_policy_grid(m, x0s, VectorXd::Zero(1), opts, true);
  for (const PolicyPoint& pt : pts) {
    double want = burnside::y2_policy(bench, pt.x0[0]).value;
    CHECK(rel_err(pt.y0_order2[0], want) < 1e-6);
    CHECK(rel_err(pt.y0_det[0], burnside::det_policy(bench, pt.x0[0]).value) < 1e-8);
  }
}

TEST_CASE("solve_expansion: order-2 expected path matches the closed form") {
  ModelSpec m = burnside::make_model(bench);
  double x0 = bench.xbar + 5 * bench.sigma_x();
  ExpansionSolution sol = solve_expansion(m, VectorXd::Constant(1, x0),
                                          VectorXd::Zero(1), bench.sigma, 2);
  for (Index t : {Index(0), Index(5), Index(20)}) {
    double want = burnside::y2_path(bench, x0, t);
    CHECK(rel_err(sol.Ey2(t, 0), want) < 1e-6);
  }
}

TEST_CASE("solve_expansion: order cap") {
  ModelSpec m = burnside::make_model(bench);
  CHECK_THROWS_AS(solve_expansion(m, VectorXd::Constant(1, bench.xbar),
                                  VectorXd::Zero(1), bench.sigma, 3),
                  SpecError);
}

TEST_CASE("solve_expansion: stage tags survive propagation") {
  ModelSpec m = burnside::make_model(bench);
  ExpansionOptions opts;
  opts.path.T = 20;  // horizon error inside the det-path stage
  try {
    solve_expansion(m, VectorXd::Constant(1, bench.xbar + 5 * bench.sigma_x()),
                    VectorXd::Zero(1), bench.sigma, 2, opts);
    FAIL("expected HorizonError");
  } catch (const HorizonError& e) {
    CHECK(e.stage() == "det-path");
  }
}

TEST_CASE("impulse_response: zero shock reduces to the unconditional expansion") {
  ModelSpec m = burnside::make_model(bench);
  VectorXd x0 = VectorXd::Constant(1, bench.xbar + 2 * bench.sigma_x());
  ImpulseResponse irf =
      impulse_response(m, x0, VectorXd::Zero(1), bench.sigma, VectorXd::Zero(1));
  ExpansionSolution sol = solve_expansion(m, x0, VectorXd::Zero(1), bench.sigma, 2);
  CHECK(irf.x1.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(irf.y1.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((irf.y2 - sol.Ey2).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("impulse_response: first-order response follows the loadings") {
  ModelSpec m = burnside::make_model(bench);
  VectorXd x0 = VectorXd::Constant(1, bench.xbar);
  ImpulseResponse irf =
      impulse_response(m, x0, VectorXd::Zero(1), bench.sigma, VectorXd::Constant(1, 1.0));
  for (Index t = 1; t <= 12; ++t)
    CHECK(rel_err(irf.x1(t, 0), std::pow(bench.rho, double(t - 1))) < 1e-9);
  double k_ss = burnside::k_inf(bench, bench.xbar, 1);
  CHECK(rel_err(irf.y1(1, 0), -k_ss) < 1e-8);
}
