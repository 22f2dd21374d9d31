#include "semiglobal/path.hpp"

#include <Eigen/Sparse>
#include <sstream>

namespace semiglobal {

EvalPoint DeterministicPath::point_at(Index t) const {
  EvalPoint p;
  p.y_next = y.row(t + 1);
  p.y_cur = y.row(t);
  p.x_next = x.row(t + 1);
  p.x_cur = x.row(t);
  p.z_next = z.row(t + 1);
  p.z_cur = z.row(t);
  return p;
}

MatrixXd propagate_exogenous(const MatrixXd& Lambda, const VectorXd& z0, Index T) {
  if (Lambda.rows() != z0.size() || Lambda.cols() != z0.size())
    throw SpecError("propagate_exogenous: dimension mismatch");
  MatrixXd path(T + 1, z0.size());
  VectorXd z = z0;
  for (Index t = 0; t <= T; ++t) {
    path.row(t) = z;
    z = Lambda * z;
  }
  return path;
}

namespace {

// Unknown vector layout: [ y_0 | x_1 y_1 | x_2 y_2 | ... | x_T y_T | x_{T+1} ].
struct Layout {
  Index n_x, n_y, T;
  Index size() const { return n_y + T * (n_x + n_y) + n_x; }
  Index y_at(Index t) const {  // t = 0..T
    return t == 0 ? 0 : n_y + (t - 1) * (n_x + n_y) + n_x;
  }
  Index x_at(Index t) const {  // t = 1..T+1
    return n_y + (t - 1) * (n_x + n_y);
  }
};

}  // namespace

DeterministicPath solve_path(const ModelSpec& model, const VectorXd& x0,
                             const VectorXd& z0, const PathOptions& opts) {
  model.validate();
  if (x0.size() != model.n_x || z0.size() != model.n_z)
    throw SpecError("solve_path: initial condition dimensions do not match");

  SteadyState ss = steady_state(model, opts.steady_guess.size() > 0
                                           ? opts.steady_guess
                                           : VectorXd::Zero(model.n_rows()));

  const Index T = opts.T;
  const Index nb = model.n_rows();
  Layout lay{model.n_x, model.n_y, T};

  DeterministicPath path;
  path.T = T;
  path.steady = ss;
  path.z = MatrixXd::Zero(T + 2, model.n_z);
  path.z.topRows(T + 1) = propagate_exogenous(model.Lambda, z0, T);
  if (model.n_z > 0) path.z.row(T + 1) = model.Lambda * path.z.row(T).transpose();

  // Start from the constant steady-state path.
  path.x = ss.x.transpose().replicate(T + 2, 1);
  path.y = ss.y.transpose().replicate(T + 2, 1);
  path.x.row(0) = x0;

  auto residual_all = [&](VectorXd& r) {
    for (Index t = 0; t <= T; ++t)
      r.segment(t * nb, nb) = evaluate(model, path.point_at(t));
  };
  auto apply_unknowns = [&](const VectorXd& u) {
    for (Index t = 0; t <= T; ++t) path.y.row(t) = u.segment(lay.y_at(t), model.n_y);
    for (Index t = 1; t <= T + 1; ++t) path.x.row(t) = u.segment(lay.x_at(t), model.n_x);
  };
  auto collect_unknowns = [&] {
    VectorXd u(lay.size());
    for (Index t = 0; t <= T; ++t) u.segment(lay.y_at(t), model.n_y) = path.y.row(t);
    for (Index t = 1; t <= T + 1; ++t) u.segment(lay.x_at(t), model.n_x) = path.x.row(t);
    return u;
  };

  VectorXd u = collect_unknowns();
  VectorXd r(lay.size());
  residual_all(r);
  double rn = r.lpNorm<Eigen::Infinity>();
  std::vector<double> trace{rn};

  Eigen::SparseMatrix<double> J(lay.size(), lay.size());
  std::vector<Eigen::Triplet<double>> trips;
  for (int it = 0; it < opts.max_iter && rn >= opts.tol_newton; ++it) {
    trips.clear();
    for (Index t = 0; t <= T; ++t) {
      JacobianSet jt = jacobians(model, path.point_at(t));
      auto put = [&](const MatrixXd& blk, Index col0) {
        for (Index c = 0; c < blk.cols(); ++c)
          for (Index rr = 0; rr < blk.rows(); ++rr)
            if (blk(rr, c) != 0.0) trips.emplace_back(t * nb + rr, col0 + c, blk(rr, c));
      };
      put(jt[1], lay.y_at(t));                        // d f_t / d y_t
      if (t > 0) put(jt[3], lay.x_at(t));             // d f_t / d x_t (x_0 fixed)
      if (t < T) put(jt[0], lay.y_at(t + 1));         // d f_t / d y_{t+1} (y_{T+1} fixed)
      put(jt[2], lay.x_at(t + 1));                    // d f_t / d x_{t+1}
    }
    J.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(J);
    if (lu.info() != Eigen::Success)
      throw PathError("solve_path: singular stacked Jacobian at iteration " +
                      std::to_string(it));
    VectorXd step = lu.solve(r);

    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      apply_unknowns(u - lambda * step);
      VectorXd rt(lay.size());
      residual_all(rt);
      double rtn = rt.lpNorm<Eigen::Infinity>();
      if (std::isfinite(rtn) && (rtn < rn || rtn < opts.tol_newton)) {
        u -= lambda * step;
        r.swap(rt);
        rn = rtn;
        trace.push_back(rn);
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      apply_unknowns(u);
      std::ostringstream os;
      os << "solve_path: Newton stalled; residual trace:";
      for (double v : trace) os << ' ' << v;
      throw PathError(os.str());
    }
  }
  apply_unknowns(u);
  if (rn >= opts.tol_newton) {
    std::ostringstream os;
    os << "solve_path: Newton did not reach " << opts.tol_newton
       << " in " << opts.max_iter << " iterations; residual trace:";
    for (double v : trace) os << ' ' << v;
    throw PathError(os.str());
  }

  double term_x = (path.x.row(T + 1).transpose() - ss.x).lpNorm<Eigen::Infinity>();
  if (term_x > opts.tol_terminal) {
    std::ostringstream os;
    os << "solve_path: terminal state misses the steady state by " << term_x
       << " (> " << opts.tol_terminal << "); increase the horizon T";
    throw HorizonError(os.str());
  }
  return path;
}

double path_residual(const ModelSpec& model, const DeterministicPath& path) {
  double worst = 0.0;
  for (Index t = 0; t <= path.T; ++t) {
    double v = evaluate(model, path.point_at(t)).lpNorm<Eigen::Infinity>();
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace semiglobal
