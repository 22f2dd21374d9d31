#pragma once

#include <map>
#include <string>
#include <vector>

#include "semiglobal/model.hpp"
#include "semiglobal/table.hpp"

namespace semiglobal::burnside {

// Asset-pricing model: the price-dividend ratio y_t solves
//   y_t = beta E_t[ exp(theta x_{t+1}) (1 + y_{t+1}) ]
// with dividend growth x following an AR(1) around xbar. The closed forms
// below make this the reference against which the generic pipeline is
// checked.
struct Params {
  double beta = 0.95;
  double theta = -1.5;
  double xbar = 0.0179;
  double rho = 0.9;
  double sigma = 0.015;
  int n_terms = 2000;

  void validate() const;
  double steady_y() const;       // beta e^{theta xbar} / (1 - beta e^{theta xbar})
  double sigma_x() const;        // unconditional sd: sigma / sqrt(1 - rho^2)
  double series_ratio() const;   // beta exp(theta xbar + (theta sigma)^2/(2(1-rho)^2))
};

struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;   // geometric envelope of the dropped tail
  bool tail_warning = false; // tail bound above 1e-12 of the partial sum
};

// Exact policy y(x) as the discounted series of lognormal terms.
SeriesValue exact_policy(const Params& p, double x);

// Deterministic (sigma = 0) policy.
SeriesValue det_policy(const Params& p, double x);

// Deterministic path value x_t given x_0.
double det_path_x(const Params& p, double x0, Index t);

// First-order loading K_{inf,t} along the deterministic path from x0;
// y^(1)_t = -K_{inf,t} x^(1)_t.
double k_inf(const Params& p, double x0, Index t);

// Second-order policy term at date 0.
SeriesValue y2_policy(const Params& p, double x0);

// Second-order expected path term E_0 y^(2)_t.
double y2_path(const Params& p, double x0, Index t);

// Joint Taylor polynomial of the exact policy in (x - xbar, sigma) around
// (xbar, 0), truncated at the given total degree. Coefficients come from
// termwise analytic differentiation of the closed form.
double local_taylor(const Params& p, int order, double x, double sigma);

// Polynomial coefficient of (x - xbar)^k sigma^(2m) in the joint expansion.
double taylor_coefficient(const Params& p, int m, int k);

struct AccuracyFlags {
  bool exact_below_steady = false;       // exact(x_right) < ybar
  bool taylor2_above_steady = false;     // taylor2(x_right) > ybar
  bool semiglobal_below_steady = false;  // semiglobal(x_right) < ybar
  bool taylor2_sign_mismatch = false;
  bool taylor6_sign_mismatch = false;
  bool semiglobal_sign_mismatch = false;
  double max_rel_semiglobal = 0.0, max_rel_taylor2 = 0.0, max_rel_taylor6 = 0.0;
  double right_rel_semiglobal = 0.0, right_rel_taylor2 = 0.0, right_rel_taylor6 = 0.0;
  bool right_half_ranking = false;  // semiglobal < taylor6 < taylor2 on max rel err
};

struct AccuracyReport {
  Table table;  // x0, exact, semiglobal2, taylor2, taylor6, err_*
  AccuracyFlags flags;
};

std::vector<double> default_grid(const Params& p, int count = 41, double delta = 5.0);

// Policy-curve comparison over a grid; `parallel` distributes grid points
// over OpenMP threads with identical per-point arithmetic.
AccuracyReport accuracy_report(const Params& p, const std::vector<double>& grid,
                               bool parallel = false);

// The same model expressed in the generic interface: x (dividend growth) is
// carried as an endogenous state driven by the exogenous z, so the generic
// pipeline sees n_x = n_y = n_z = 1 with analytic derivatives.
ModelSpec make_model(const Params& p);

Params params_from_overrides(const std::map<std::string, double>& overrides);

}  // namespace semiglobal::burnside
