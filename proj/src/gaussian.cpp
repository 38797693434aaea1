#include "nioc/gaussian.hpp"

#include <cmath>

namespace nioc {

namespace {

constexpr double kBaseJitter = 1e-12;
constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteValue(std::string(what) + " has non-finite entries");
}

}  // namespace

Gaussian::Gaussian(VectorXd mean_in, MatrixXd cov_in) : mean(std::move(mean_in)), cov(std::move(cov_in)) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size())
    throw InvalidArgument("gaussian: inconsistent mean/cov dimensions");
  require_finite(cov, "gaussian covariance");
  if (!mean.allFinite()) throw NonFiniteValue("gaussian mean has non-finite entries");
  cov = 0.5 * (cov + cov.transpose()).eval();
  if (cov.size() > 0) {
    const double floor = -1e-8 * std::max(1.0, cov.trace());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < floor)
      throw InvalidArgument("gaussian: covariance is not positive semidefinite");
  }
}

Eigen::LLT<MatrixXd> cholesky_with_jitter(const MatrixXd& cov) {
  require_finite(cov, "covariance");
  const int d = static_cast<int>(cov.rows());
  const MatrixXd sym = 0.5 * (cov + cov.transpose());
  const double scale = std::max(1.0, sym.trace() / std::max(1, d));
  const double max_jitter = 1e-3 * scale;
  double jitter = kBaseJitter;
  while (true) {
    Eigen::LLT<MatrixXd> llt(sym + jitter * MatrixXd::Identity(d, d));
    if (llt.info() == Eigen::Success) return llt;
    jitter *= 10.0;
    if (jitter > max_jitter)
      throw SingularCovariance("covariance not factorizable after jitter escalation");
  }
}

double gaussian_logpdf(const Gaussian& g, const VectorXd& x) {
  if (x.size() != g.mean.size()) throw InvalidArgument("gaussian_logpdf: dimension mismatch");
  if (!x.allFinite()) throw NonFiniteValue("gaussian_logpdf: point has non-finite entries");
  const auto llt = cholesky_with_jitter(g.cov);
  const VectorXd r = x - g.mean;
  const VectorXd z = llt.matrixL().solve(r);
  double logdet = 0.0;
  for (int i = 0; i < g.dim(); ++i) logdet += std::log(llt.matrixL()(i, i));
  const double lp = -0.5 * z.squaredNorm() - logdet - 0.5 * g.dim() * std::log(kTwoPi);
  if (!std::isfinite(lp)) throw NonFiniteValue("gaussian_logpdf: non-finite result");
  return lp;
}

Gaussian GaussianJoint::full() const {
  const int nx = dim_x(), nb = dim_b();
  VectorXd mean(nx + nb);
  mean << mean_x, mean_b;
  MatrixXd cov(nx + nb, nx + nb);
  cov.topLeftCorner(nx, nx) = cov_xx;
  cov.topRightCorner(nx, nb) = cov_xb;
  cov.bottomLeftCorner(nb, nx) = cov_xb.transpose();
  cov.bottomRightCorner(nb, nb) = cov_bb;
  return Gaussian(mean, cov);
}

Gaussian gaussian_condition(const GaussianJoint& joint, const VectorXd& x_obs) {
  if (x_obs.size() != joint.mean_x.size())
    throw InvalidArgument("gaussian_condition: observation dimension mismatch");
  const auto llt = cholesky_with_jitter(joint.cov_xx);
  // mean_b + cov_bx cov_xx^-1 (x - mean_x), cov_bb - cov_bx cov_xx^-1 cov_xb
  const MatrixXd w = llt.solve(joint.cov_xb);  // cov_xx^-1 cov_xb
  const VectorXd mean = joint.mean_b + w.transpose() * (x_obs - joint.mean_x);
  MatrixXd cov = joint.cov_bb - joint.cov_xb.transpose() * w;
  cov = 0.5 * (cov + cov.transpose()).eval();
  return Gaussian(mean, cov);
}

}  // namespace nioc
