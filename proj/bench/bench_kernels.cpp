// Times the OpenMP grid and Monte-Carlo kernels against their serial
// reference paths on the built-in model.

#include <chrono>
#include <cstdio>

#include "semiglobal/burnside.hpp"
#include "semiglobal/expansion.hpp"
#include "semiglobal/report.hpp"

using namespace semiglobal;

namespace {

template <typename Fn>
double time_ms(Fn&& fn, int reps = 3) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    double ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    if (ms < best) best = ms;
  }
  return best;
}

}  // namespace

int main() {
  burnside::Params p;
  ModelSpec model = burnside::make_model(p);
  auto grid = burnside::default_grid(p, 41, 5.0);

  double t_acc_serial = time_ms([&] { burnside::accuracy_report(p, grid, false); });
  double t_acc_par = time_ms([&] { burnside::accuracy_report(p, grid, true); });

  std::vector<VectorXd> x0s;
  for (double x : grid) x0s.push_back(VectorXd::Constant(1, x));
  ExpansionOptions opts;
  double t_grid_serial =
      time_ms([&] { solve_policy_grid(model, x0s, VectorXd::Zero(1), opts, false); }, 1);
  double t_grid_par =
      time_ms([&] { solve_policy_grid(model, x0s, VectorXd::Zero(1), opts, true); }, 1);

  DeterministicPath path = solve_path(model, VectorXd::Constant(1, p.xbar + 0.1),
                                      VectorXd::Zero(1));
  SchurSplit split = block_schur(steady_forward_map(model, path.steady), model.n_y);
  TVSystem sys = build_tvsystem(model, path, split);
  RecursionTables tab = backward_recursion(sys, {});
  std::vector<Index> times = {5, 10, 20};
  double t_mc_serial = time_ms(
      [&] { mc_first_order_cov(sys, tab, model.Omega, times, 100000, 42, false); }, 1);
  double t_mc_par = time_ms(
      [&] { mc_first_order_cov(sys, tab, model.Omega, times, 100000, 42, true); }, 1);

  std::printf("%-28s %12s %12s %8s\n", "kernel", "serial ms", "parallel ms", "speedup");
  auto row = [](const char* name, double s, double par) {
    std::printf("%-28s %12.2f %12.2f %7.2fx\n", name, s, par, s / par);
  };
  row("accuracy_report 41pt", t_acc_serial, t_acc_par);
  row("solve_policy_grid 41pt", t_grid_serial, t_grid_par);
  row("mc_first_order_cov 1e5", t_mc_serial, t_mc_par);
  return 0;
}
