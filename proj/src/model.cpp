#include "semiglobal/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace semiglobal {

VectorXd EvalPoint::stacked() const {
  VectorXd v(y_next.size() + y_cur.size() + x_next.size() + x_cur.size() +
             z_next.size() + z_cur.size());
  Index at = 0;
  for (const VectorXd* part : {&y_next, &y_cur, &x_next, &x_cur, &z_next, &z_cur}) {
    v.segment(at, part->size()) = *part;
    at += part->size();
  }
  return v;
}

EvalPoint EvalPoint::from_stacked(const VectorXd& v, Index n_x, Index n_y, Index n_z) {
  EvalPoint p;
  Index at = 0;
  p.y_next = v.segment(at, n_y); at += n_y;
  p.y_cur = v.segment(at, n_y); at += n_y;
  p.x_next = v.segment(at, n_x); at += n_x;
  p.x_cur = v.segment(at, n_x); at += n_x;
  p.z_next = v.segment(at, n_z); at += n_z;
  p.z_cur = v.segment(at, n_z);
  return p;
}

HessianSet::HessianSet(Index n_x, Index n_y, Index n_z) {
  offsets_ = {0, n_y, 2 * n_y, 2 * n_y + n_x, 2 * n_y + 2 * n_x,
              2 * n_y + 2 * n_x + n_z, 2 * n_y + 2 * n_x + 2 * n_z};
  dim_ = offsets_[6];
  rows_.assign(static_cast<std::size_t>(n_x + n_y), MatrixXd::Zero(dim_, dim_));
}

void HessianSet::set_pair_block(Index row, int i, int j, const MatrixXd& block) {
  if (j < i) {
    set_pair_block(row, j, i, block.transpose());
    return;
  }
  rows_[row].block(offsets_[i], offsets_[j], arg_dim(i), arg_dim(j)) = block;
  if (i == j) {
    // keep the stored upper triangle consistent for the diagonal block
    rows_[row].block(offsets_[i], offsets_[j], arg_dim(i), arg_dim(j)) =
        0.5 * (block + block.transpose());
  }
}

MatrixXd HessianSet::pair_block(Index row, int i, int j) const {
  MatrixXd full_row = rows_[row].selfadjointView<Eigen::Upper>();
  return full_row.block(offsets_[i], offsets_[j], arg_dim(i), arg_dim(j));
}

VectorXd HessianSet::apply(int i, int j, const VectorXd& u, const VectorXd& v) const {
  VectorXd out(n_rows());
  for (Index r = 0; r < n_rows(); ++r) out[r] = u.dot(pair_block(r, i, j) * v);
  return out;
}

void ModelSpec::validate() const {
  if (n_x < 0 || n_y < 0 || n_z < 0 || n_rows() <= 0)
    throw SpecError("model '" + name + "': invalid dimensions");
  if (Lambda.rows() != n_z || Lambda.cols() != n_z)
    throw SpecError("model '" + name + "': Lambda must be n_z x n_z");
  if (Omega.rows() != n_z || Omega.cols() != n_z)
    throw SpecError("model '" + name + "': Omega must be n_z x n_z");
  if (sigma < 0.0) throw SpecError("model '" + name + "': sigma must be nonnegative");
  if (!residual) throw SpecError("model '" + name + "': residual map missing");
  if (n_z > 0) {
    if ((Omega - Omega.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw SpecError("model '" + name + "': Omega not symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Omega);
    if (es.eigenvalues().minCoeff() < -1e-12)
      throw SpecError("model '" + name + "': Omega not positive semidefinite");
    double rad = Lambda.eigenvalues().cwiseAbs().maxCoeff();
    if (rad >= 1.0)
      throw SpecError("model '" + name + "': spectral radius of Lambda is " +
                      std::to_string(rad) + " >= 1");
  }
}

namespace {

void check_dims(const ModelSpec& m, const EvalPoint& p) {
  if (p.y_next.size() != m.n_y || p.y_cur.size() != m.n_y ||
      p.x_next.size() != m.n_x || p.x_cur.size() != m.n_x ||
      p.z_next.size() != m.n_z || p.z_cur.size() != m.n_z)
    throw SpecError("model '" + m.name + "': evaluation point dimensions do not match");
}

VectorXd eval_checked(const ModelSpec& m, const EvalPoint& p) {
  VectorXd r = m.residual(p);
  if (r.size() != m.n_rows())
    throw SpecError("model '" + m.name + "': residual length " +
                    std::to_string(r.size()) + " != n_x + n_y = " +
                    std::to_string(m.n_rows()));
  return r;
}

VectorXd eval_stacked(const ModelSpec& m, const VectorXd& v) {
  return eval_checked(m, EvalPoint::from_stacked(v, m.n_x, m.n_y, m.n_z));
}

void require_finite(const VectorXd& r, const ModelSpec& m, Index coord) {
  if (!r.allFinite())
    throw DifferentiationError("model '" + m.name +
                               "': non-finite residual in stencil at stacked coordinate " +
                               std::to_string(coord));
}

double fd_step_first(double x) { return std::max(1e-6, 1e-7 * std::abs(x)); }
double fd_step_second(double x) { return std::max(1e-4, 1e-5 * std::abs(x)); }

}  // namespace

VectorXd evaluate(const ModelSpec& model, const EvalPoint& p) {
  check_dims(model, p);
  return eval_checked(model, p);
}

JacobianSet fd_jacobians(const ModelSpec& model, const EvalPoint& p) {
  check_dims(model, p);
  const VectorXd base = p.stacked();
  const Index dim = base.size();
  MatrixXd jac_full(model.n_rows(), dim);
  for (Index k = 0; k < dim; ++k) {
    double h = fd_step_first(base[k]);
    VectorXd vp = base, vm = base;
    vp[k] += h;
    vm[k] -= h;
    VectorXd rp = eval_stacked(model, vp);
    VectorXd rm = eval_stacked(model, vm);
    require_finite(rp, model, k);
    require_finite(rm, model, k);
    jac_full.col(k) = (rp - rm) / (2.0 * h);
  }
  JacobianSet out;
  const std::array<Index, 6> sizes = {model.n_y, model.n_y, model.n_x,
                                      model.n_x, model.n_z, model.n_z};
  Index at = 0;
  for (int a = 0; a < 6; ++a) {
    out[a] = jac_full.middleCols(at, sizes[a]);
    at += sizes[a];
  }
  return out;
}

JacobianSet jacobians(const ModelSpec& model, const EvalPoint& p) {
  if (model.analytic_jacobians) {
    check_dims(model, p);
    return model.analytic_jacobians(p);
  }
  return fd_jacobians(model, p);
}

HessianSet fd_hessians(const ModelSpec& model, const EvalPoint& p) {
  check_dims(model, p);
  const VectorXd base = p.stacked();
  const Index dim = base.size();
  HessianSet hess(model.n_x, model.n_y, model.n_z);
  const VectorXd r0 = eval_stacked(model, base);
  require_finite(r0, model, -1);

  // Full stacked second differences; pair blocks fall out of the offsets.
  std::vector<VectorXd> plus(dim), minus(dim);
  for (Index k = 0; k < dim; ++k) {
    double h = fd_step_second(base[k]);
    VectorXd vp = base, vm = base;
    vp[k] += h;
    vm[k] -= h;
    plus[k] = eval_stacked(model, vp);
    minus[k] = eval_stacked(model, vm);
    require_finite(plus[k], model, k);
    require_finite(minus[k], model, k);
  }
  for (Index r = 0; r < model.n_rows(); ++r) {
    MatrixXd H = MatrixXd::Zero(dim, dim);
    for (Index a = 0; a < dim; ++a) {
      double ha = fd_step_second(base[a]);
      H(a, a) = (plus[a][r] - 2.0 * r0[r] + minus[a][r]) / (ha * ha);
      for (Index b = a + 1; b < dim; ++b) {
        double hb = fd_step_second(base[b]);
        VectorXd vpp = base, vpm = base, vmp = base, vmm = base;
        vpp[a] += ha; vpp[b] += hb;
        vpm[a] += ha; vpm[b] -= hb;
        vmp[a] -= ha; vmp[b] += hb;
        vmm[a] -= ha; vmm[b] -= hb;
        VectorXd rpp = eval_stacked(model, vpp), rpm = eval_stacked(model, vpm);
        VectorXd rmp = eval_stacked(model, vmp), rmm = eval_stacked(model, vmm);
        require_finite(rpp, model, b);
        require_finite(rmm, model, b);
        H(a, b) = (rpp[r] - rpm[r] - rmp[r] + rmm[r]) / (4.0 * ha * hb);
      }
    }
    for (int i = 0; i < 6; ++i)
      for (int j = i; j < 6; ++j)
        hess.set_pair_block(r, i, j,
                            H.block(hess.arg_offset(i), hess.arg_offset(j),
                                    hess.arg_dim(i), hess.arg_dim(j)));
  }
  return hess;
}

HessianSet hessians(const ModelSpec& model, const EvalPoint& p) {
  if (model.analytic_hessians) {
    check_dims(model, p);
    return model.analytic_hessians(p);
  }
  return fd_hessians(model, p);
}

EvalPoint steady_point(const ModelSpec& model, const SteadyState& ss) {
  EvalPoint p;
  p.y_next = ss.y;
  p.y_cur = ss.y;
  p.x_next = ss.x;
  p.x_cur = ss.x;
  p.z_next = VectorXd::Zero(model.n_z);
  p.z_cur = VectorXd::Zero(model.n_z);
  return p;
}

SteadyState steady_state(const ModelSpec& model, const VectorXd& guess,
                         const SteadyStateOptions& opts) {
  if (guess.size() != model.n_rows())
    throw SpecError("steady_state: guess length " + std::to_string(guess.size()) +
                    " != n_x + n_y = " + std::to_string(model.n_rows()));
  auto point_of = [&](const VectorXd& w) {
    SteadyState s{w.head(model.n_y), w.tail(model.n_x)};
    return steady_point(model, s);
  };
  VectorXd w = guess;
  VectorXd r = evaluate(model, point_of(w));
  double rn = r.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < opts.max_iter; ++it) {
    if (rn < opts.tol) return SteadyState{w.head(model.n_y), w.tail(model.n_x)};
    JacobianSet J = jacobians(model, point_of(w));
    MatrixXd Jc(model.n_rows(), model.n_rows());
    Jc.leftCols(model.n_y) = J[0] + J[1];
    Jc.rightCols(model.n_x) = J[2] + J[3];
    Eigen::FullPivLU<MatrixXd> lu(Jc);
    if (!lu.isInvertible())
      throw ConditioningError("steady_state: singular combined Jacobian at iteration " +
                              std::to_string(it));
    VectorXd step = lu.solve(r);
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      VectorXd wt = w - lambda * step;
      VectorXd rt = evaluate(model, point_of(wt));
      double rtn = rt.lpNorm<Eigen::Infinity>();
      if (std::isfinite(rtn) && (rtn < rn || rtn < opts.tol)) {
        w = wt;
        r = rt;
        rn = rtn;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted)
      throw SteadyStateError("steady_state: no progress at iteration " +
                             std::to_string(it) + ", residual " + std::to_string(rn));
  }
  if (rn < opts.tol) return SteadyState{w.head(model.n_y), w.tail(model.n_x)};
  std::ostringstream os;
  os << "steady_state: Newton did not converge in " << opts.max_iter
     << " iterations, final residual " << rn;
  throw SteadyStateError(os.str());
}

}  // namespace semiglobal
