#pragma once

#include <Eigen/Dense>

#include "nioc/errors.hpp"

namespace nioc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Multivariate Gaussian in moment form. Construction symmetrizes the
// covariance and rejects matrices whose smallest eigenvalue is below
// -1e-8 * trace.
struct Gaussian {
  VectorXd mean;
  MatrixXd cov;

  Gaussian() = default;
  Gaussian(VectorXd mean_in, MatrixXd cov_in);

  int dim() const { return static_cast<int>(mean.size()); }
};

// Cholesky factor of (cov + jitter*I). The base jitter is an absolute
// 1e-12 floor, escalated tenfold on factorization failure up to
// 1e-3 * max(1, trace/d). An absolute floor keeps degenerate (exactly
// deterministic) coordinates from coupling the log-density constant to
// unrelated parameters through the trace. Throws SingularCovariance when
// the ladder is exhausted, NonFiniteValue on NaN/Inf entries.
Eigen::LLT<MatrixXd> cholesky_with_jitter(const MatrixXd& cov);

double gaussian_logpdf(const Gaussian& g, const VectorXd& x);

// Joint Gaussian over a stacked pair (x, b) kept in blocks.
struct GaussianJoint {
  VectorXd mean_x;
  VectorXd mean_b;
  MatrixXd cov_xx;
  MatrixXd cov_xb;  // cov(x, b), shape dim_x x dim_b
  MatrixXd cov_bb;

  int dim_x() const { return static_cast<int>(mean_x.size()); }
  int dim_b() const { return static_cast<int>(mean_b.size()); }

  Gaussian full() const;
  Gaussian marginal_x() const { return Gaussian(mean_x, cov_xx); }
  Gaussian marginal_b() const { return Gaussian(mean_b, cov_bb); }
};

// Posterior of b given x = x_obs, via Schur complement on the x block.
Gaussian gaussian_condition(const GaussianJoint& joint, const VectorXd& x_obs);

}  // namespace nioc
