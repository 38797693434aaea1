#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "nioc/errors.hpp"

namespace nioc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using VectorFn = std::function<VectorXd(const VectorXd&)>;
using ScalarFn = std::function<double(const VectorXd&)>;

// Central-difference Jacobian with per-coordinate step
// h_i = max(1e-6, 1e-6*|x_i|). Throws NonFiniteValue if any probe is
// non-finite.
MatrixXd jacobian(const VectorFn& fn, const VectorXd& x);

// Jacobian of fn with respect to a contiguous group of coordinates of the
// stacked argument; columns [offset, offset+width).
MatrixXd jacobian_block(const VectorFn& fn, const VectorXd& x, int offset, int width);

// Jacobian blocks of fn over a stacked argument, split by argument group.
struct JacobianSet {
  std::vector<MatrixXd> blocks;  // one per group, in order
};
JacobianSet jacobian_groups(const VectorFn& fn, const VectorXd& x, const std::vector<int>& group_sizes);

// Local quadratic model of a scalar function. The Hessian uses
// second-order central differences with step max(1e-3, 1e-3*|x_i|) —
// wider than the Jacobian step because second differences lose half the
// mantissa to cancellation — then is symmetrized and eigenvalue-clamped
// to be positive semidefinite (floor 1e-8).
struct Quadratization {
  double value = 0.0;
  VectorXd gradient;
  MatrixXd hessian;
};
Quadratization hessian_quadratize(const ScalarFn& fn, const VectorXd& x);

}  // namespace nioc
