#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "semiglobal/burnside.hpp"
#include "semiglobal/path.hpp"

using namespace semiglobal;
using namespace semiglobal::burnside;
using testutil::rel_err;

namespace {
Params bench;
}

TEST_CASE("params: benchmark is summable, malformed inputs are rejected") {
  bench.validate();
  CHECK(bench.series_ratio() < 1.0);
  CHECK(std::abs(bench.sigma_x() - 0.034412) < 1e-6);

  Params bad = bench;
  bad.beta = 1.2;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = bench;
  bad.theta = 0.0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = bench;
  bad.rho = 1.0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = bench;
  bad.n_terms = 100;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = bench;
  bad.sigma = 0.2;  // ratio above one
  CHECK(bad.series_ratio() > 1.0);
  CHECK_THROWS_AS(exact_policy(bad, bad.xbar), DivergenceError);
}

TEST_CASE("exact_policy: deterministic point recovers the steady state") {
  Params p0 = bench;
  p0.sigma = 0.0;
  double y = exact_policy(p0, bench.xbar).value;
  CHECK(rel_err(y, bench.steady_y()) < 1e-12);
  CHECK(std::abs(y - 12.3035) < 1e-4);
  CHECK(std::abs(y - 12.3) < 5e-3);  // three significant figures
}

TEST_CASE("exact_policy: positive uncertainty premium at the benchmark") {
  double y = exact_policy(bench, bench.xbar).value;
  CHECK(y > bench.steady_y());
  // Independently frozen from a second implementation of the closed form.
  CHECK(rel_err(y, 14.831165073269693) < 1e-9);
}

TEST_CASE("exact_policy: tail control and n_terms insensitivity") {
  SeriesValue v = exact_policy(bench, bench.xbar + 3 * bench.sigma_x());
  CHECK_FALSE(v.tail_warning);
  Params p1 = bench;
  p1.n_terms = 1000;
  Params p2 = bench;
  p2.n_terms = 2000;
  for (double x : {bench.xbar - 5 * bench.sigma_x(), bench.xbar,
                   bench.xbar + 5 * bench.sigma_x()}) {
    CHECK(rel_err(exact_policy(p1, x).value, exact_policy(p2, x).value) < 1e-10);
    CHECK(rel_err(y2_policy(p1, x).value, y2_policy(p2, x).value) < 1e-10);
  }
}

TEST_CASE("det_policy: equals the sigma = 0 exact series everywhere") {
  for (double x : {bench.xbar - 5 * bench.sigma_x(), bench.xbar - 0.03, bench.xbar,
                   bench.xbar + 0.08, bench.xbar + 5 * bench.sigma_x()}) {
    Params p0 = bench;
    p0.sigma = 0.0;
    CHECK(rel_err(det_policy(bench, x).value, exact_policy(p0, x).value) < 1e-12);
    CHECK(rel_err(det_policy(bench, x).value,
                  testutil::det_policy_series(bench, x)) < 1e-12);
  }
}

TEST_CASE("det_policy: matches the stacked-time solver at five sigma") {
  ModelSpec m = make_model(bench);
  double x0 = bench.xbar + 5 * bench.sigma_x();
  DeterministicPath path = solve_path(m, VectorXd::Constant(1, x0), VectorXd::Zero(1));
  CHECK(rel_err(path.y(0, 0), det_policy(bench, x0).value) < 1e-8);
}

TEST_CASE("k_inf: steady-state value has a geometric closed form") {
  double g = bench.beta * bench.rho * std::exp(bench.theta * bench.xbar);
  double want = -bench.theta * (1.0 + bench.steady_y()) * g / (1.0 - g);
  CHECK(rel_err(k_inf(bench, bench.xbar, 0), want) < 1e-12);
  CHECK(rel_err(want, 99.07316667385673) < 1e-12);
}

TEST_CASE("k_inf: sign follows the curvature parameter") {
  for (double x0 : {bench.xbar - 5 * bench.sigma_x(), bench.xbar,
                    bench.xbar + 5 * bench.sigma_x()})
    for (Index t : {Index(0), Index(3), Index(25)})
      CHECK(k_inf(bench, x0, t) > 0.0);  // theta < 0
}

TEST_CASE("y2_policy: zero-persistence degeneration") {
  Params p = bench;
  p.rho = 0.0;
  // With rho = 0 the path sits at x0 for one period only and the variance
  // weight is 1 for every i; the sum collapses to an explicit series.
  double ybar = p.steady_y();
  double kz = 0.0;  // beta*rho = 0 kills the first-order loading
  double want = 0.0;
  for (int i = 1; i <= p.n_terms; ++i)
    want += 0.5 * p.theta * std::pow(p.beta, i) *
            std::exp(p.theta * p.xbar * i) * (p.theta * (1.0 + ybar) - 2.0 * kz);
  CHECK(rel_err(y2_policy(p, p.xbar).value, want) < 1e-12);
}

TEST_CASE("y2_policy: agrees with the sigma-squared coefficient of the exact series") {
  // Independent route: differentiate the closed form in sigma^2 at sigma = 0.
  double coeff = taylor_coefficient(bench, 1, 0);
  CHECK(rel_err(y2_policy(bench, bench.xbar).value, coeff) < 1e-9);
  CHECK(rel_err(coeff, 8021.814236979642) < 1e-9);
}

TEST_CASE("local_taylor: anchored at the steady state") {
  CHECK(rel_err(local_taylor(bench, 2, bench.xbar, 0.0), bench.steady_y()) < 1e-12);
  CHECK(rel_err(local_taylor(bench, 6, bench.xbar, 0.0), bench.steady_y()) < 1e-12);
  CHECK_THROWS_AS(local_taylor(bench, 4, bench.xbar, bench.sigma), SpecError);
}

TEST_CASE("local_taylor: linear coefficient equals the discounted slope series") {
  // Termwise differentiation gives sum beta^i b_i e^{theta xbar i}, which is
  // also the negative of the steady-state first-order loading.
  double want = 0.0;
  for (int i = 1; i <= bench.n_terms; ++i) {
    double b = bench.theta * bench.rho * (1.0 - std::pow(bench.rho, i)) /
               (1.0 - bench.rho);
    want += std::pow(bench.beta, i) * b * std::exp(bench.theta * bench.xbar * i);
  }
  CHECK(rel_err(taylor_coefficient(bench, 0, 1), want) < 1e-12);
  CHECK(rel_err(want, -k_inf(bench, bench.xbar, 0)) < 1e-10);
}

TEST_CASE("exact policy is monotone decreasing for the benchmark curvature") {
  auto grid = default_grid(bench, 41, 5.0);
  double prev = exact_policy(bench, grid[0]).value;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double cur = exact_policy(bench, grid[i]).value;
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("accuracy_report: table shape, error columns and observed ranking") {
  auto grid = default_grid(bench, 41, 5.0);
  CHECK(grid.size() == 41);
  CHECK(grid.front() == doctest::Approx(bench.xbar - 5 * bench.sigma_x()));
  CHECK(grid.back() == doctest::Approx(bench.xbar + 5 * bench.sigma_x()));

  AccuracyReport rep = accuracy_report(bench, grid, false);
  CHECK(rep.table.columns.size() == 8);
  CHECK(rep.table.rows.size() == 41);
  for (const auto& row : rep.table.rows) {
    CHECK(row[5] == row[2] - row[1]);
    CHECK(row[6] == row[3] - row[1]);
    CHECK(row[7] == row[4] - row[1]);
  }
  // Right-half ordering of maximal relative errors.
  CHECK(rep.flags.right_half_ranking);
  CHECK(rep.flags.max_rel_semiglobal < rep.flags.max_rel_taylor6);
  CHECK(rep.flags.max_rel_taylor6 < rep.flags.max_rel_taylor2);
  // The exact policy response to the large positive displacement is negative,
  // and the semi-global curve reproduces it.
  CHECK(rep.flags.exact_below_steady);
  CHECK(rep.flags.semiglobal_below_steady);
  CHECK_FALSE(rep.flags.semiglobal_sign_mismatch);
}

TEST_CASE("make_model: analytic hessians agree with finite differences") {
  ModelSpec m = make_model(bench);
  EvalPoint p;
  p.y_next = VectorXd::Constant(1, 11.0);
  p.y_cur = VectorXd::Constant(1, 13.0);
  p.x_next = VectorXd::Constant(1, 0.11);
  p.x_cur = VectorXd::Constant(1, -0.04);
  p.z_next = VectorXd::Constant(1, 0.02);
  p.z_cur = VectorXd::Constant(1, -0.01);
  HessianSet an = m.analytic_hessians(p);
  HessianSet fd = fd_hessians(m, p);
  for (Index r = 0; r < 2; ++r)
    CHECK((an.full(r) - fd.full(r)).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("params_from_overrides: keys map onto fields") {
  Params p = params_from_overrides({{"beta", 0.9}, {"rho", 0.5}, {"n_terms", 600}});
  CHECK(p.beta == 0.9);
  CHECK(p.rho == 0.5);
  CHECK(p.n_terms == 600);
  CHECK_THROWS_AS(params_from_overrides({{"gamma", 1.0}}), SpecError);
}
