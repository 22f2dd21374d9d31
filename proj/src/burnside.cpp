#include "semiglobal/burnside.hpp"

#include <cmath>
#include <sstream>

namespace semiglobal::burnside {

namespace {

double b_coef(const Params& p, double i) {
  return p.theta * p.rho * (1.0 - std::pow(p.rho, i)) / (1.0 - p.rho);
}

double c_coef(const Params& p, double i) {
  double r = p.rho;
  return i - 2.0 * r * (1.0 - std::pow(r, i)) / (1.0 - r) +
         r * r * (1.0 - std::pow(r, 2.0 * i)) / (1.0 - r * r);
}

// Half the variance weight: a_i = theta xbar i + sigma^2 q_i.
double q_coef(const Params& p, double i) {
  double s = p.theta / (1.0 - p.rho);
  return 0.5 * s * s * c_coef(p, i);
}

}  // namespace

void Params::validate() const {
  if (!(beta > 0.0 && beta < 1.0))
    throw SpecError("burnside: beta must lie in (0, 1)");
  if (!(theta < 1.0) || theta == 0.0)
    throw SpecError("burnside: theta must be nonzero and below 1");
  if (!(std::abs(rho) < 1.0)) throw SpecError("burnside: |rho| must be below 1");
  if (n_terms < 500) throw SpecError("burnside: n_terms must be at least 500");
  if (series_ratio() >= 1.0) {
    std::ostringstream os;
    os << "burnside: series ratio " << series_ratio()
       << " >= 1, the exact policy series diverges";
    throw DivergenceError(os.str());
  }
}

double Params::steady_y() const {
  double q = beta * std::exp(theta * xbar);
  return q / (1.0 - q);
}

double Params::sigma_x() const { return sigma / std::sqrt(1.0 - rho * rho); }

double Params::series_ratio() const {
  double s = theta * sigma / (1.0 - rho);
  return beta * std::exp(theta * xbar + 0.5 * s * s);
}

SeriesValue exact_policy(const Params& p, double x) {
  p.validate();
  SeriesValue out;
  const double u = x - p.xbar;
  for (int i = 1; i <= p.n_terms; ++i) {
    double a = p.theta * p.xbar * i + p.sigma * p.sigma * q_coef(p, i);
    out.value += std::pow(p.beta, i) * std::exp(a + b_coef(p, i) * u);
  }
  // Dropped tail under the asymptotic geometric envelope: past term N the
  // increments of b_i and c_i have settled, leaving a ratio within
  // exp(|theta| rho^{N+1} |u|) of the limit.
  double r = p.series_ratio() *
             std::exp(std::abs(p.theta * u) *
                      std::pow(std::abs(p.rho), double(p.n_terms + 1)));
  double last = std::pow(p.beta, p.n_terms) *
                std::exp(p.theta * p.xbar * p.n_terms +
                         p.sigma * p.sigma * q_coef(p, p.n_terms) +
                         b_coef(p, p.n_terms) * u);
  out.tail_bound = r < 1.0 ? last * r / (1.0 - r)
                           : std::numeric_limits<double>::infinity();
  out.tail_warning = !(out.tail_bound <= 1e-12 * std::abs(out.value));
  return out;
}

SeriesValue det_policy(const Params& p, double x) {
  Params q = p;
  q.sigma = 0.0;
  return exact_policy(q, x);
}

double det_path_x(const Params& p, double x0, Index t) {
  return p.xbar + std::pow(p.rho, static_cast<double>(t)) * (x0 - p.xbar);
}

namespace {

// K at the steady-state path, where the sum is a plain geometric series.
double k_steady(const Params& p) {
  double g = p.beta * p.rho * std::exp(p.theta * p.xbar);
  return -p.theta * (1.0 + p.steady_y()) * g / (1.0 - g);
}

// Deterministic path values from x0, cached so the nested series below stay
// linear in n_terms. Beyond `settle` the path is at the steady state to
// machine precision.
struct PathCache {
  const Params& p;
  double x0;
  Index settle;
  std::vector<double> y0;  // y0[t] for t = 0..settle
  double y_ss;

  explicit PathCache(const Params& params, double start)
      : p(params), x0(start), y_ss(params.steady_y()) {
    double dev = std::abs(x0 - p.xbar);
    double arho = std::abs(p.rho);
    settle = 1;
    while (dev * std::pow(arho, static_cast<double>(settle)) > 1e-15 &&
           settle < 100000)
      ++settle;
    y0.resize(settle + 1);
    y0[settle] = det_policy(p, det_path_x(p, x0, settle)).value;
    for (Index t = settle - 1; t >= 0; --t)
      y0[t] = p.beta * std::exp(p.theta * det_path_x(p, x0, t + 1)) * (1.0 + y0[t + 1]);
  }

  double y_at(Index t) const { return t <= settle ? y0[t] : y_ss; }
};

double k_inf_cached(const Params& p, const PathCache& cache, Index t) {
  const double dev = cache.x0 - p.xbar;
  const double rt1 = std::pow(p.rho, static_cast<double>(t + 1));
  if (std::abs(rt1 * dev) < 1e-14) return k_steady(p);
  double sum = 0.0;
  const double br = p.beta * p.rho;
  double brm = 1.0, rhom = 1.0;
  for (int m = 1; m <= p.n_terms; ++m) {
    brm *= br;
    rhom *= p.rho;
    double expo = p.theta * (p.xbar * m + dev * rt1 * (1.0 - rhom) / (1.0 - p.rho));
    double term = brm * (1.0 + cache.y_at(t + m)) * std::exp(expo);
    sum += term;
    if (m > 30 && term < 1e-17 * sum) break;
  }
  return -p.theta * sum;
}

double y2_sum(const Params& p, const PathCache& cache, Index t, double* tail_out) {
  const double dev = cache.x0 - p.xbar;
  const double varfac = 1.0 / (1.0 - p.rho * p.rho);
  const double k_ss = k_steady(p);
  const double rt1 = std::pow(p.rho, static_cast<double>(t + 1));
  double sum = 0.0, last = 0.0;
  double betai = 1.0, rhoi = 1.0;
  const double rho_t = std::pow(p.rho, static_cast<double>(t));
  for (int i = 1; i <= p.n_terms; ++i) {
    betai *= p.beta;
    rhoi *= p.rho;
    double rho_ti = rho_t * rhoi;
    double ex2 = (1.0 - rho_ti * rho_ti) * varfac;
    double expo = p.theta * (p.xbar * i + dev * rt1 * (1.0 - rhoi) / (1.0 - p.rho));
    bool settled = std::abs(rho_ti * dev) < 1e-13;
    double ki = settled ? k_ss : k_inf_cached(p, cache, t + i);
    last = betai * ex2 * std::exp(expo) *
           (p.theta * (1.0 + cache.y_at(t + i)) - 2.0 * ki);
    sum += 0.5 * p.theta * last;
  }
  if (tail_out) {
    double r = p.beta * std::exp(p.theta * p.xbar);
    *tail_out = std::abs(0.5 * p.theta * last) * r / (1.0 - r);
  }
  return sum;
}

}  // namespace

double k_inf(const Params& p, double x0, Index t) {
  PathCache cache(p, x0);
  return k_inf_cached(p, cache, t);
}

SeriesValue y2_policy(const Params& p, double x0) {
  p.validate();
  PathCache cache(p, x0);
  SeriesValue out;
  out.value = y2_sum(p, cache, 0, &out.tail_bound);
  out.tail_warning = !(out.tail_bound <= 1e-12 * std::abs(out.value));
  return out;
}

double y2_path(const Params& p, double x0, Index t) {
  PathCache cache(p, x0);
  return y2_sum(p, cache, t, nullptr);
}

double taylor_coefficient(const Params& p, int m, int k) {
  double fact = 1.0;
  for (int j = 2; j <= m; ++j) fact *= j;
  for (int j = 2; j <= k; ++j) fact *= j;
  double sum = 0.0;
  for (int i = 1; i <= p.n_terms; ++i) {
    double w = std::pow(p.beta, i) * std::exp(p.theta * p.xbar * i);
    sum += w * std::pow(q_coef(p, i), m) * std::pow(b_coef(p, i), k);
  }
  return sum / fact;
}

double local_taylor(const Params& p, int order, double x, double sigma) {
  if (order != 2 && order != 6)
    throw SpecError("local_taylor: order must be 2 or 6");
  const double u = x - p.xbar;
  double total = 0.0;
  for (int m = 0; 2 * m <= order; ++m)
    for (int k = 0; 2 * m + k <= order; ++k)
      total += taylor_coefficient(p, m, k) * std::pow(sigma, 2 * m) * std::pow(u, k);
  return total;
}

std::vector<double> default_grid(const Params& p, int count, double delta) {
  if (count < 2) throw SpecError("default_grid: need at least 2 points");
  std::vector<double> xs(count);
  double lo = p.xbar - delta * p.sigma_x();
  double hi = p.xbar + delta * p.sigma_x();
  for (int i = 0; i < count; ++i)
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  return xs;
}

AccuracyReport accuracy_report(const Params& p, const std::vector<double>& grid,
                               bool parallel) {
  p.validate();
  if (grid.size() < 2) throw SpecError("accuracy_report: need at least 2 grid points");

  const auto n = static_cast<Index>(grid.size());
  std::vector<std::array<double, 4>> vals(n);  // exact, semiglobal2, taylor2, taylor6

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (Index i = 0; i < n; ++i) {
    double x = grid[i];
    double ex = exact_policy(p, x).value;
    double sg = det_policy(p, x).value + p.sigma * p.sigma * y2_policy(p, x).value;
    double t2 = local_taylor(p, 2, x, p.sigma);
    double t6 = local_taylor(p, 6, x, p.sigma);
    vals[i] = {ex, sg, t2, t6};
  }

  AccuracyReport rep;
  rep.table.columns = {"x0",          "exact",       "semiglobal2", "taylor2",
                       "taylor6",     "err_semiglobal2", "err_taylor2", "err_taylor6"};
  double mr_sg = 0.0, mr_t2 = 0.0, mr_t6 = 0.0;
  double mr_sg_right = 0.0, mr_t2_right = 0.0, mr_t6_right = 0.0;
  for (Index i = 0; i < n; ++i) {
    auto [ex, sg, t2, t6] = vals[i];
    rep.table.add_row({grid[i], ex, sg, t2, t6, sg - ex, t2 - ex, t6 - ex});
    double rsg = std::abs(sg - ex) / std::abs(ex);
    double rt2 = std::abs(t2 - ex) / std::abs(ex);
    double rt6 = std::abs(t6 - ex) / std::abs(ex);
    mr_sg = std::max(mr_sg, rsg);
    mr_t2 = std::max(mr_t2, rt2);
    mr_t6 = std::max(mr_t6, rt6);
    if (i >= n / 2) {
      mr_sg_right = std::max(mr_sg_right, rsg);
      mr_t2_right = std::max(mr_t2_right, rt2);
      mr_t6_right = std::max(mr_t6_right, rt6);
    }
  }
  AccuracyFlags& f = rep.flags;
  f.max_rel_semiglobal = mr_sg;
  f.max_rel_taylor2 = mr_t2;
  f.max_rel_taylor6 = mr_t6;
  f.right_half_ranking = mr_sg_right < mr_t6_right && mr_t6_right < mr_t2_right;

  const double ybar = p.steady_y();
  auto [ex_r, sg_r, t2_r, t6_r] = vals[n - 1];
  f.exact_below_steady = ex_r < ybar;
  f.taylor2_above_steady = t2_r > ybar;
  f.semiglobal_below_steady = sg_r < ybar;
  auto sgn = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
  f.taylor2_sign_mismatch = sgn(t2_r - ybar) != sgn(ex_r - ybar);
  f.taylor6_sign_mismatch = sgn(t6_r - ybar) != sgn(ex_r - ybar);
  f.semiglobal_sign_mismatch = sgn(sg_r - ybar) != sgn(ex_r - ybar);
  f.right_rel_semiglobal = std::abs(sg_r - ex_r) / std::abs(ex_r);
  f.right_rel_taylor2 = std::abs(t2_r - ex_r) / std::abs(ex_r);
  f.right_rel_taylor6 = std::abs(t6_r - ex_r) / std::abs(ex_r);
  return rep;
}

ModelSpec make_model(const Params& p) {
  p.validate();
  ModelSpec m;
  m.name = "burnside";
  m.n_x = 1;
  m.n_y = 1;
  m.n_z = 1;
  m.Lambda = MatrixXd::Constant(1, 1, p.rho);
  m.Omega = MatrixXd::Identity(1, 1);
  m.sigma = p.sigma;

  const double beta = p.beta, theta = p.theta, xbar = p.xbar, rho = p.rho;
  // Dividend growth is carried as an endogenous state driven by z: the
  // x-equation holds exactly along every realization, the y-equation is the
  // asset-pricing condition.
  m.residual = [=](const EvalPoint& q) {
    VectorXd r(2);
    r[0] = q.x_next[0] - (1.0 - rho) * xbar - rho * q.x_cur[0] - q.z_next[0] +
           rho * q.z_cur[0];
    r[1] = q.y_cur[0] - beta * std::exp(theta * q.x_next[0]) * (1.0 + q.y_next[0]);
    return r;
  };
  m.analytic_jacobians = [=](const EvalPoint& q) {
    JacobianSet J;
    double e = beta * std::exp(theta * q.x_next[0]);
    J[0] = (MatrixXd(2, 1) << 0.0, -e).finished();                        // y_next
    J[1] = (MatrixXd(2, 1) << 0.0, 1.0).finished();                       // y_cur
    J[2] = (MatrixXd(2, 1) << 1.0, -e * theta * (1.0 + q.y_next[0])).finished();
    J[3] = (MatrixXd(2, 1) << -rho, 0.0).finished();                      // x_cur
    J[4] = (MatrixXd(2, 1) << -1.0, 0.0).finished();                      // z_next
    J[5] = (MatrixXd(2, 1) << rho, 0.0).finished();                       // z_cur
    return J;
  };
  m.analytic_hessians = [=](const EvalPoint& q) {
    HessianSet H(1, 1, 1);
    double e = beta * std::exp(theta * q.x_next[0]);
    // Row 1 (the pricing equation): d2/dy' dx' and d2/dx'^2.
    H.set_pair_block(1, 0, 2, MatrixXd::Constant(1, 1, -e * theta));
    H.set_pair_block(1, 2, 2,
                     MatrixXd::Constant(1, 1, -e * theta * theta * (1.0 + q.y_next[0])));
    return H;
  };
  return m;
}

Params params_from_overrides(const std::map<std::string, double>& overrides) {
  Params p;
  for (const auto& [key, value] : overrides) {
    if (key == "beta") p.beta = value;
    else if (key == "theta") p.theta = value;
    else if (key == "xbar") p.xbar = value;
    else if (key == "rho") p.rho = value;
    else if (key == "sigma") p.sigma = value;
    else if (key == "n_terms") p.n_terms = static_cast<int>(value);
    else throw SpecError("burnside: unknown parameter '" + key + "'");
  }
  return p;
}

}  // namespace semiglobal::burnside
