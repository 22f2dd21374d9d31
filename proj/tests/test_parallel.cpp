// The OpenMP kernels must reproduce the serial reference bit for bit: work
// is partitioned into fixed slots or fixed-order chunks, never reduced in a
// thread-dependent order.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "oracles.hpp"
#include "semiglobal/expansion.hpp"
#include "semiglobal/report.hpp"

using namespace semiglobal;

namespace {
burnside::Params bench;
}

TEST_CASE("accuracy_report: parallel equals serial bitwise") {
  auto grid = burnside::default_grid(bench, 21, 5.0);
  burnside::AccuracyReport a = burnside::accuracy_report(bench, grid, false);
  burnside::AccuracyReport b = burnside::accuracy_report(bench, grid, true);
  REQUIRE(a.table.rows.size() == b.table.rows.size());
  for (std::size_t r = 0; r < a.table.rows.size(); ++r)
    for (std::size_t c = 0; c < a.table.rows[r].size(); ++c)
      CHECK(a.table.rows[r][c] == b.table.rows[r][c]);
  CHECK(a.flags.max_rel_semiglobal == b.flags.max_rel_semiglobal);
}

TEST_CASE("solve_policy_grid: parallel equals serial bitwise") {
  ModelSpec m = burnside::make_model(bench);
  std::vector<VectorXd> x0s;
  for (double d : {-4.0, -2.0, 0.0, 2.0, 4.0})
    x0s.push_back(VectorXd::Constant(1, bench.xbar + d * bench.sigma_x()));
  ExpansionOptions opts;
  auto a = solve_policy_grid(m, x0s, VectorXd::Zero(1), opts, false);
  auto b = solve_policy_grid(m, x0s, VectorXd::Zero(1), opts, true);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].y0_det[0] == b[i].y0_det[0]);
    CHECK(a[i].y0_order2[0] == b[i].y0_order2[0]);
    CHECK(a[i].eq38_pass == b[i].eq38_pass);
  }
}

TEST_CASE("solve_policy_grid: a failing point surfaces its exception") {
  ModelSpec m = burnside::make_model(bench);
  std::vector<VectorXd> x0s = {VectorXd::Constant(1, bench.xbar),
                               VectorXd::Constant(1, bench.xbar + 40.0)};
  ExpansionOptions opts;
  opts.path.T = 80;
  CHECK_THROWS_AS(solve_policy_grid(m, x0s, VectorXd::Zero(1), opts, true),
                  SolverError);
}

TEST_CASE("mc_first_order_cov: parallel equals serial bitwise") {
  ModelSpec m = burnside::make_model(bench);
  PathOptions po;
  po.T = 40;
  po.tol_terminal = 1e-2;  // short horizon is fine for early-time moments
  DeterministicPath path =
      solve_path(m, VectorXd::Constant(1, bench.xbar + 2 * bench.sigma_x()),
                 VectorXd::Zero(1), po);
  SchurSplit split = block_schur(steady_forward_map(m, path.steady), 1);
  TVSystem sys = build_tvsystem(m, path, split);
  RecursionTables tab = backward_recursion(sys, {});
  std::vector<Index> times = {3, 10, 25};
  auto a = mc_first_order_cov(sys, tab, m.Omega, times, 20000, 9, false);
  auto b = mc_first_order_cov(sys, tab, m.Omega, times, 20000, 9, true);
  for (std::size_t w = 0; w < times.size(); ++w)
    CHECK((a[w] - b[w]).lpNorm<Eigen::Infinity>() == 0.0);
}

#ifdef _OPENMP
TEST_CASE("openmp is actually enabled for the kernels") {
  CHECK(omp_get_max_threads() >= 1);
}
#endif
