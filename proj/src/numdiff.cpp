#include "nioc/numdiff.hpp"

#include <cmath>

namespace nioc {

namespace {

constexpr double kJacStep = 1e-6;
constexpr double kHessStep = 1e-3;
constexpr double kHessianFloor = 1e-8;

double step_for(double xi, double base) { return std::max(base, base * std::abs(xi)); }

VectorXd probe(const VectorFn& fn, const VectorXd& x) {
  VectorXd y = fn(x);
  if (!y.allFinite()) throw NonFiniteValue("derivative probe returned non-finite values");
  return y;
}

double probe_scalar(const ScalarFn& fn, const VectorXd& x) {
  const double y = fn(x);
  if (!std::isfinite(y)) throw NonFiniteValue("derivative probe returned a non-finite value");
  return y;
}

}  // namespace

MatrixXd jacobian_block(const VectorFn& fn, const VectorXd& x, int offset, int width) {
  if (offset < 0 || width < 0 || offset + width > x.size())
    throw InvalidArgument("jacobian_block: bad column range");
  VectorXd xp = x;
  MatrixXd jac;
  for (int j = 0; j < width; ++j) {
    const int col = offset + j;
    const double h = step_for(x[col], kJacStep);
    xp[col] = x[col] + h;
    const VectorXd fp = probe(fn, xp);
    xp[col] = x[col] - h;
    const VectorXd fm = probe(fn, xp);
    xp[col] = x[col];
    if (jac.size() == 0) jac.resize(fp.size(), width);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  if (jac.size() == 0) jac.resize(probe(fn, x).size(), 0);
  return jac;
}

MatrixXd jacobian(const VectorFn& fn, const VectorXd& x) {
  return jacobian_block(fn, x, 0, static_cast<int>(x.size()));
}

JacobianSet jacobian_groups(const VectorFn& fn, const VectorXd& x, const std::vector<int>& group_sizes) {
  int total = 0;
  for (int s : group_sizes) total += s;
  if (total != x.size()) throw InvalidArgument("jacobian_groups: group sizes do not cover the point");
  JacobianSet out;
  int offset = 0;
  for (int s : group_sizes) {
    out.blocks.push_back(jacobian_block(fn, x, offset, s));
    offset += s;
  }
  return out;
}

Quadratization hessian_quadratize(const ScalarFn& fn, const VectorXd& x) {
  const int d = static_cast<int>(x.size());
  Quadratization q;
  q.value = probe_scalar(fn, x);
  q.gradient.resize(d);
  q.hessian.resize(d, d);

  VectorXd xp = x;
  for (int i = 0; i < d; ++i) {
    const double h = step_for(x[i], kJacStep);
    xp[i] = x[i] + h;
    const double fp = probe_scalar(fn, xp);
    xp[i] = x[i] - h;
    const double fm = probe_scalar(fn, xp);
    xp[i] = x[i];
    q.gradient[i] = (fp - fm) / (2.0 * h);
  }

  // Diagonal second differences, then off-diagonal four-point stencils.
  std::vector<double> hs(d);
  for (int i = 0; i < d; ++i) hs[i] = step_for(x[i], kHessStep);
  for (int i = 0; i < d; ++i) {
    xp[i] = x[i] + hs[i];
    const double fp = probe_scalar(fn, xp);
    xp[i] = x[i] - hs[i];
    const double fm = probe_scalar(fn, xp);
    xp[i] = x[i];
    q.hessian(i, i) = (fp - 2.0 * q.value + fm) / (hs[i] * hs[i]);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      xp[i] = x[i] + hs[i];
      xp[j] = x[j] + hs[j];
      const double fpp = probe_scalar(fn, xp);
      xp[j] = x[j] - hs[j];
      const double fpm = probe_scalar(fn, xp);
      xp[i] = x[i] - hs[i];
      const double fmm = probe_scalar(fn, xp);
      xp[j] = x[j] + hs[j];
      const double fmp = probe_scalar(fn, xp);
      xp[i] = x[i];
      xp[j] = x[j];
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * hs[i] * hs[j]);
      q.hessian(i, j) = v;
      q.hessian(j, i) = v;
    }
  }

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(q.hessian);
  VectorXd ev = es.eigenvalues();
  for (int i = 0; i < d; ++i) ev[i] = std::max(ev[i], kHessianFloor);
  q.hessian = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  q.hessian = 0.5 * (q.hessian + q.hessian.transpose()).eval();
  return q;
}

}  // namespace nioc
